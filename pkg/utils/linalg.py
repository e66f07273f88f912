import numpy as np

from utils.errors import NoConvergenceQR

RADIX = 2.


def balance(a):
    """
    Diagonal similarity scaling by powers of two so that every row and its column have comparable 1-norms.
    The eigenvalues are unchanged and the rounding in the later stages shrinks.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    converged = False
    while not converged:
        converged = True
        for i in range(n):
            c = np.abs(a[:, i]).sum() - abs(a[i, i])
            r = np.abs(a[i, :]).sum() - abs(a[i, i])
            if c == 0 or r == 0:
                continue

            s = c + r
            f = 1.
            while c < r / RADIX:
                c *= RADIX
                r /= RADIX
                f *= RADIX
            while c >= r * RADIX:
                c /= RADIX
                r *= RADIX
                f /= RADIX

            if (c + r) < 0.95 * s:
                converged = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def householder(x):
    """
    Householder vector u of a complex vector x, (I - 2uu*)x = alpha * e_0.
    Return:
        u: (ndarray) unit vector, None if x is zero.
        alpha: (complex) -|x| exp(1j * angle(x_0)).
    """
    norm = np.linalg.norm(x)
    if norm == 0:
        return None, 0j

    phase = x[0] / abs(x[0]) if x[0] != 0 else 1.
    alpha = -phase * norm
    u = x.astype(complex)
    u[0] -= alpha
    u /= np.linalg.norm(u)
    return u, alpha


def hessenberg(a):
    """Upper Hessenberg form of a by Householder similarity transforms."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        u, alpha = householder(h[k + 1:, k])
        if u is None:
            continue

        # P = I - 2uu* from the left, then from the right
        h[k + 1:, k:] -= 2 * np.outer(u, u.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2 * np.outer(h[:, k + 1:] @ u, u.conj())
        h[k + 1, k] = alpha
        h[k + 2:, k] = 0
    return h


def givens(a, b):
    """
    Complex Givens rotation G = [[c, s], [-s*, c]] with G @ [a, b] = [r, 0], c real.
    """
    norm = np.hypot(abs(a), abs(b))
    if norm == 0:
        return 1., 0j
    if a == 0:
        return 0., 1. + 0j

    phase = a / abs(a)
    return abs(a) / norm, phase * np.conj(b) / norm


def _rotate_rows(h, k, c, s, lo, hi):
    r0 = h[k, lo:hi + 1].copy()
    r1 = h[k + 1, lo:hi + 1]
    h[k, lo:hi + 1] = c * r0 + s * r1
    h[k + 1, lo:hi + 1] = -np.conj(s) * r0 + c * r1


def _rotate_cols(h, k, c, s, lo, hi):
    c0 = h[lo:hi + 1, k].copy()
    c1 = h[lo:hi + 1, k + 1]
    h[lo:hi + 1, k] = c * c0 + np.conj(s) * c1
    h[lo:hi + 1, k + 1] = -s * c0 + c * c1


def wilkinson_shift(a, b, c, d):
    """Eigenvalue of [[a, b], [c, d]] closest to d."""
    half = (a - d) / 2
    root = np.sqrt(half * half + b * c)
    mu1, mu2 = (a + d) / 2 + root, (a + d) / 2 - root
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def hessenberg_qr(h, tol=1e-14, max_iter=100, exceptional_every=10):
    """
    Eigenvalues of an upper Hessenberg matrix by the implicitly shifted single-shift complex QR iteration.
    Only the active unreduced block is updated, the Schur vectors are never formed.
    Args:
        h: (ndarray) complex upper Hessenberg matrix, overwritten.
        tol: relative deflation threshold on the subdiagonal.
        max_iter: iteration cap per eigenvalue.
        exceptional_every: an ad hoc shift replaces the Wilkinson shift every this many iterations.
    Return:
        (ndarray) the eigenvalues, unordered.
    """
    n = h.shape[0]
    values = np.empty(n, dtype=complex)
    floor = np.finfo(float).tiny * n / np.finfo(float).eps
    hi = n - 1
    iters = 0

    while hi >= 0:
        lo = hi
        while lo > 0:
            scale = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if abs(h[lo, lo - 1]) < max(tol * scale, floor):
                h[lo, lo - 1] = 0
                break
            lo -= 1

        if lo == hi:
            values[hi] = h[hi, hi]
            hi -= 1
            iters = 0
            continue

        iters += 1
        if iters > max_iter:
            raise NoConvergenceQR(f'QR iteration did not converge for eigenvalue {hi}.', index=hi, iterations=iters,
                                  subdiagonal=abs(h[hi, hi - 1]))

        if iters % exceptional_every == 0:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1]) * (1 + 1j)
        else:
            mu = wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])

        # introduce the bulge, then chase it down the subdiagonal
        c, s = givens(h[lo, lo] - mu, h[lo + 1, lo])
        _rotate_rows(h, lo, c, s, lo, hi)
        _rotate_cols(h, lo, c, s, lo, min(lo + 2, hi))
        for k in range(lo + 1, hi):
            c, s = givens(h[k, k - 1], h[k + 1, k - 1])
            _rotate_rows(h, k, c, s, k - 1, hi)
            h[k + 1, k - 1] = 0
            _rotate_cols(h, k, c, s, lo, min(k + 2, hi))

    return values


def eigvals(a, **kwargs):
    """All eigenvalues of a dense complex matrix, ordered by (Re, Im)."""
    a = np.asarray(a, dtype=complex)
    assert a.ndim == 2 and a.shape[0] == a.shape[1], f'Expected a square matrix, got shape {a.shape}.'
    assert np.isfinite(a).all(), 'The matrix has non finite entries.'
    if a.shape[0] == 0:
        return a.diagonal().copy()

    values = hessenberg_qr(hessenberg(balance(a)), **kwargs)
    return values[np.lexsort((values.imag, values.real))]


def eigen_witness(a, value, iterations=3):
    """
    Smallest singular value estimate of (A - λI) by inverse iteration, the residual witness of an eigenvalue.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    shifted = a - value * np.eye(n)
    x = np.ones(n, dtype=complex) / np.sqrt(n)
    sigma = np.inf
    for _ in range(iterations):
        try:
            y = np.linalg.solve(shifted, x)
        except np.linalg.LinAlgError:
            return 0.

        norm = np.linalg.norm(y)
        if not np.isfinite(norm):
            return 0.
        sigma = 1 / norm
        x = y / norm
    return float(min(sigma, np.linalg.norm(shifted @ x)))
