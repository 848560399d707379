from helpers.common import ChoiceEnum


class GammaSpec(ChoiceEnum):
    """
    Shapes of the multiplicative volatility factor applied to simulated paths.
    """

    CONSTANT = "Constant"
    """All ones: the stationary eGARCH scenario."""
    STEP = "Step"
    """Piecewise levels 1 / 1.5 / 0.75 switching at 0.4n and 0.7n."""
    SMOOTH = "Smooth"
    """1 + 0.5 sin(2 pi t / 500)."""
