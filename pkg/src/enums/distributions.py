from helpers.common import ChoiceEnum


class DistKind(ChoiceEnum):
    """
    Innovation laws. Both have unit variance.
    """

    STANDARD_NORMAL = "normal"
    STANDARDIZED_T = "t"
    """Student-t rescaled by sqrt((nu - 2) / nu); needs nu > 2."""
