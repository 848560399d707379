import numpy as np


def np_linear(min_value, max_value, step_value):
    # Calculate the number of points
    num_points = abs(int(np.round((max_value - min_value) / step_value))) + 1

    # Handle cases where num_points might be less than 1
    if num_points < 1:
        raise ValueError("Invalid range or step value resulting in non-positive number of points.")

    return np.linspace(min_value, max_value, num_points)


def type7_quantile(values, p):
    """
    Empirical quantile by linear interpolation of order statistics.

    For sorted x of length n the position is h = (n - 1) * p and the value is
    x[floor(h)] + (h - floor(h)) * (x[floor(h) + 1] - x[floor(h)]), which is
    numpy's "linear" method.
    """
    return float(np.quantile(np.asarray(values, dtype=float), p, method="linear"))


def iqr(values):
    q75, q25 = np.quantile(np.asarray(values, dtype=float), [0.75, 0.25], method="linear")
    return float(q75 - q25)


def weighted_lower_quantile(y, w, tau):
    """
    Left endpoint of the set of minimizers of sum_i w_i * rho_tau(y_i - b).

    The minimizers are the b with W(y < b) <= tau * W <= W(y <= b); the
    left endpoint is the smallest order statistic whose cumulative weight
    reaches tau * W.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    order = np.argsort(y, kind="stable")
    cum = np.cumsum(w[order])
    total = cum[-1]
    k = int(np.searchsorted(cum, tau * total - 1e-12 * total, side="left"))
    return float(y[order][min(k, len(y) - 1)])


def piecewise_levels(n, breaks, levels):
    """
    Piecewise-constant sequence of length n.

    breaks are fractions of n where the level changes; levels has one entry
    more than breaks. Index t (zero-based) takes levels[j] where j counts the
    breaks with breaks[j] * n <= t.
    """
    if len(levels) != len(breaks) + 1:
        raise ValueError("levels must have exactly one entry more than breaks.")
    t = np.arange(n)
    cut_points = np.asarray(breaks, dtype=float) * n
    index = np.searchsorted(cut_points, t, side="right")
    return np.asarray(levels, dtype=float)[index]
