from helpers.common import ChoiceEnum


class BandwidthRule(ChoiceEnum):
    RULE_OF_THUMB_IQR = "RuleOfThumbIQR"
    QCV = "QCV"
    """Leave-one-out cross-validation over a quantile grid, first window only."""
    FIXED = "Fixed"
