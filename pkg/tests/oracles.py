"""Independent reference computations used only by tests.

Everything here is built from explicit dense matrices with numpy complex
arithmetic; none of it touches the package's gate or kernel code paths.
"""

import numpy as np

M2 = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)


def shift_matrix(thetas):
    return np.diag(np.exp(1j * np.asarray(thetas)))


def mix_matrix(n, start):
    u = np.eye(n, dtype=complex)
    for j in range(start, n - 1, 2):
        u[j : j + 2, j : j + 2] = M2
    return u


def layer_matrices(kinds, n, params):
    """Dense matrix per layer; ``None`` marks a normalize layer."""
    mats, off = [], 0
    for kind in kinds:
        if kind == "shift":
            mats.append(shift_matrix(params[off : off + n]))
            off += n
        elif kind == "mix-even":
            mats.append(mix_matrix(n, 0))
        elif kind == "mix-odd":
            mats.append(mix_matrix(n, 1))
        else:
            mats.append(None)
    return mats


def dense_forward(kinds, n, params, z):
    z = np.asarray(z, dtype=complex)
    for m in layer_matrices(kinds, n, params):
        z = z / np.abs(z) if m is None else m @ z
    return z


def realify(a):
    """Real 2N x 2N matrix acting on stacked (Re z, Im z)."""
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


def dense_gradient(kinds, n, params, z, cot_re, cot_im):
    """dL/dtheta for a normalize-free circuit via explicit real Jacobians.

    For the shift angle on thread k in layer l the state derivative is
    ``U_after @ (i e_k w_k)`` with ``w`` the post-shift state; it is carried in
    real coordinates by ``realify(U_after)`` and contracted with the output
    cotangent.
    """
    mats = layer_matrices(kinds, n, params)
    assert all(m is not None for m in mats), "oracle covers normalize-free circuits only"
    cot = np.concatenate([cot_re, cot_im])
    grads = []
    state = np.asarray(z, dtype=complex)
    for l, (kind, m) in enumerate(zip(kinds, mats)):
        state = m @ state
        if kind != "shift":
            continue
        after = np.eye(n, dtype=complex)
        for m2 in mats[l + 1 :]:
            after = m2 @ after
        jac_after = realify(after)
        for k in range(n):
            d = np.zeros(n, dtype=complex)
            d[k] = 1j * state[k]
            col = jac_after @ np.concatenate([d.real, d.imag])
            grads.append(float(cot @ col))
    return np.array(grads)


def random_kinds(rng, depth, allow_normalize=False):
    choices = ["shift", "mix-even", "mix-odd"] + (["normalize"] if allow_normalize else [])
    return [choices[i] for i in rng.integers(0, len(choices), size=depth)]
