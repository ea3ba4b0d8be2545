"""Selection of the risk-integrand backend.

At import we try the compiled extension; the numpy path in `risk` is the
fallback and also serves user-defined models, losses, and multipliers that
cannot be encoded for the kernel.  BSHRINK_BACKEND=python|compiled|auto
forces the choice (compiled raises if the extension is missing).
"""

import os

import numpy as np

try:
    from . import _kernels
except ImportError:
    _kernels = None

HAVE_COMPILED = _kernels is not None

_EMPTY = np.zeros(0)

_FAMILY_IDS = {"expmix": 0, "kotz": 1, "ball": 2}


def backend_mode():
    mode = os.environ.get("BSHRINK_BACKEND", "auto").lower()
    if mode not in ("auto", "python", "compiled"):
        raise ValueError(f"BSHRINK_BACKEND must be auto|python|compiled, got {mode!r}")
    if mode == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("BSHRINK_BACKEND=compiled but the extension is not built")
    return mode


def active_backend():
    """Name of the backend the next risk quadrature will try first."""
    mode = backend_mode()
    if mode == "auto":
        return "compiled" if HAVE_COMPILED else "python"
    return mode


def _loss_kernel_params(loss):
    p = loss.params
    if loss.name == "reflected_normal":
        return p["alpha"], 0.0
    if loss.name == "power_shift":
        return p["gamma"], p["beta"]
    if loss.name == "rational":
        return p["r"], 0.0
    if loss.name == "power":
        return p["q"], 0.0
    return 0.0, 0.0


def compiled_outer_integrand(model, bl, est, lam, cpsi, t_nodes, t_wts,
                             c_nodes, c_wts):
    """(callable, args) for scipy.integrate.quad, or None when the
    configuration cannot run on the compiled kernel."""
    if backend_mode() in ("python",) or not HAVE_COMPILED:
        return None
    enc = model.kernel_encoding()
    loss = bl.shape
    mult_c = est.multiplier.ratio_c
    if enc is None or loss.kernel_id is None or mult_c is None:
        return None

    par = np.zeros(_kernels.PARAM_LEN)
    par[0] = lam
    par[1] = cpsi
    par[2] = model.dim / 2 - 1
    par[3] = (model.dim - 3) / 2
    par[4] = _FAMILY_IDS[enc["family"]]
    par[9] = model.w_upper()  # z-range cut for the inner rule
    mix_coef = mix_rate = _EMPTY
    if enc["family"] == "expmix":
        mix_coef = np.ascontiguousarray(enc["coef"], dtype=float)
        mix_rate = np.ascontiguousarray(enc["rate"], dtype=float)
    elif enc["family"] == "kotz":
        par[5] = enc["coef"]
        par[6] = enc["pow0"]
        par[7] = enc["rate"]
        par[8] = enc["power"]
    else:
        par[5] = enc["coef"]
    par[10] = loss.kernel_id
    par[11], par[12] = _loss_kernel_params(loss)
    par[13] = 0.0 if bl.form == "rho" else 1.0
    par[14] = bl.omega
    par[15] = est.shrink_b
    par[16] = mult_c

    args = (par, np.ascontiguousarray(t_nodes), np.ascontiguousarray(t_wts),
            np.ascontiguousarray(c_nodes), np.ascontiguousarray(c_wts),
            mix_coef, mix_rate)
    return _kernels.risk_outer_integrand, args
