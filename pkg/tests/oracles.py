"""Brute-force reference implementations, written straight from the definitions."""


def window_unique_elsewhere(x, i, length):
    n = len(x)
    if i + length > n:
        return True
    w = x[i : i + length]
    return not any(j != i and j + length <= n and x[j : j + length] == w for j in range(n))


def match_lengths(x):
    """Shortest window at each i that occurs at no other position; off-end windows match nothing."""
    x = list(x)
    out = []
    for i in range(len(x)):
        length = 1
        while not window_unique_elsewhere(x, i, length):
            length += 1
        out.append(length)
    return out


def match_set(x, i, length=None):
    """Positions j != i whose window of length L_i - 1 equals the one at i."""
    x = list(x)
    n = len(x)
    if length is None:
        length = match_lengths(x)[i]
    w = length - 1
    return {j for j in range(n) if j != i and j + w <= n and x[j : j + w] == x[i : i + w]}


def crossings(T):
    n = len(T)
    c_lr = [sum(1 for k in range(n) if k < j <= T[k]) for j in range(n)]
    c_rl = [sum(1 for k in range(n) if T[k] < j <= k) for j in range(n)]
    return c_lr, c_rl


def model_b_crossing_moments(n, c, alpha_l, alpha_r, j):
    """Mean and variance of C_LR(j) and C_RL(j) in Model B as sums of binomials.

    Block masses use the integer split c. Before the split every left-right
    crossing comes from the left block; after it, edges from both blocks can
    cross. Returns ((mean_lr, var_lr), (mean_rl, var_rl)).
    """
    mass_l = c + (n - c) * alpha_l
    mass_r = c * alpha_r + (n - c)

    def tail(row_mass, w_left, w_right):
        # P(T >= j) under weights w_left on [0, c) and w_right on [c, n)
        if j < c:
            return ((c - j) * w_left + (n - c) * w_right) / row_mass
        return (n - j) * w_right / row_mass

    p_left = tail(mass_l, 1.0, alpha_l)
    p_right = tail(mass_r, alpha_r, 1.0)
    # C_LR(j): sources k < j
    parts_lr = [(min(j, c), p_left), (max(j - c, 0), p_right)]
    # C_RL(j): sources k >= j, success = P(T < j)
    parts_rl = [(max(c - j, 0), 1 - p_left), (n - max(j, c), 1 - p_right)]

    def moments(parts):
        return sum(m * p for m, p in parts), sum(m * p * (1 - p) for m, p in parts)

    return moments(parts_lr), moments(parts_rl)
