"""Chain bundles: a plain-text directory holding a fitted chain and its data.

Layout::

    meta          key = value lines (format version, configuration, scaling)
    thetas.csv    theta_w,theta_y per sample
    w_000.csv ... latent matrix of each sample
    x.csv, y.csv  training data in natural units

Numbers are written with 17 significant digits so that loading reproduces
every stored value bitwise. The plug-in coregionalization estimates are
not stored; they are recomputed from the stored state on load.
"""

import os

import numpy as np

from .data import Dataset, columns, read_csv, write_csv
from .errors import DataError
from .icm import PriorSpec
from .sampler import Chain, ChainMeta, ChainSample, ModelSpec, SamplerConfig, plug_in_estimates

FORMAT_VERSION = 1

_INT_CONFIG = ("iterations", "burn_in", "thinning", "seed", "ess_max_shrinks")
_FLOAT_CONFIG = ("proposal_l", "proposal_u", "jitter")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(_fmt(x) for x in np.ravel(v))
    return str(v)


def _w_name(t, total):
    width = max(3, len(str(max(total - 1, 0))))
    return f"w_{t:0{width}d}.csv"


def save_chain(path, chain, train):
    """Write ``chain`` and its training data to directory ``path``."""
    os.makedirs(path, exist_ok=True)
    cfg, model, meta = chain.config, chain.model, chain.meta
    entries = [
        ("format_version", FORMAT_VERSION),
        ("layers", model.layers),
        ("latent_dim", meta.latent_dim),
        ("latent_dim_override", model.latent_dim if model.latent_dim is not None else "none"),
        ("n", meta.n),
        ("d", meta.d),
        ("q", meta.q),
    ]
    entries += [(k, getattr(cfg, k)) for k in _INT_CONFIG + _FLOAT_CONFIG]
    entries += [
        ("prior_shape", model.priors.shape),
        ("prior_rate_theta_y", model.priors.rate_theta_y),
        ("prior_rate_theta_w", model.priors.rate_theta_w),
        ("x_lower", meta.x_bounds[:, 0]),
        ("x_upper", meta.x_bounds[:, 1]),
        ("y_center", meta.y_center),
        ("y_scale", meta.y_scale),
    ]
    entries += [(f"acceptance_{k}", v) for k, v in sorted(chain.acceptance.items())]
    entries.append(("samples", len(chain)))
    with open(os.path.join(path, "meta"), "w", encoding="utf-8") as fh:
        for k, v in entries:
            fh.write(f"{k} = {_fmt(v)}\n")

    thetas = np.array([[s.theta_w, s.theta_y] for s in chain.samples]).reshape(-1, 2)
    write_csv(os.path.join(path, "thetas.csv"), ["theta_w", "theta_y"], thetas)
    head = columns("w", meta.latent_dim)
    for t, s in enumerate(chain.samples):
        write_csv(os.path.join(path, _w_name(t, len(chain))), head, s.w)
    write_csv(os.path.join(path, "x.csv"), columns("x", train.d), train.x)
    write_csv(os.path.join(path, "y.csv"), columns("y", train.q), train.y)


def read_meta(path):
    meta = {}
    with open(os.path.join(path, "meta"), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if " = " not in line:
                raise DataError(f"{path}/meta: line {lineno}: expected 'key = value'")
            k, v = line.split(" = ", 1)
            meta[k.strip()] = v.strip()
    return meta


def _floats(s):
    return np.array([float(x) for x in s.split(",")], dtype=float)


def load_chain(path):
    """Read a bundle written by :func:`save_chain`. Returns (chain, train)."""
    try:
        meta = read_meta(path)
    except FileNotFoundError:
        raise DataError(f"{path}: not a chain bundle (missing meta)") from None
    version = int(meta.get("format_version", -1))
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported bundle format version {version}")
    cfg = SamplerConfig(
        **{k: int(meta[k]) for k in _INT_CONFIG}, **{k: float(meta[k]) for k in _FLOAT_CONFIG}
    )
    override = meta["latent_dim_override"]
    priors = PriorSpec(
        shape=float(meta["prior_shape"]),
        rate_theta_y=float(meta["prior_rate_theta_y"]),
        rate_theta_w=float(meta["prior_rate_theta_w"]),
    )
    model = ModelSpec(
        layers=int(meta["layers"]),
        latent_dim=None if override == "none" else int(override),
        priors=priors,
    )
    bounds = np.column_stack([_floats(meta["x_lower"]), _floats(meta["x_upper"])])
    _, x = read_csv(os.path.join(path, "x.csv"))
    _, y = read_csv(os.path.join(path, "y.csv"))
    train = Dataset.from_arrays(x, y, bounds=bounds)
    if not (
        np.array_equal(train.y_center, _floats(meta["y_center"]))
        and np.array_equal(train.y_scale, _floats(meta["y_scale"]))
    ):
        raise DataError(f"{path}: stored output scaling does not match y.csv")

    _, thetas = read_csv(os.path.join(path, "thetas.csv"), allow_nan=True)
    total = int(meta["samples"])
    if thetas.shape[0] != total:
        raise DataError(f"{path}: thetas.csv has {thetas.shape[0]} rows, meta says {total}")
    xs, ys = train.x_scaled, train.y_scaled
    samples = []
    for t in range(total):
        _, w = read_csv(os.path.join(path, _w_name(t, total)))
        w.setflags(write=False)
        theta_w, theta_y = float(thetas[t, 0]), float(thetas[t, 1])
        b_w, b_y = plug_in_estimates(xs, ys, w, theta_w, theta_y, cfg.jitter, model.layers)
        samples.append(ChainSample(theta_w=theta_w, theta_y=theta_y, w=w, b_hat_w=b_w, b_hat_y=b_y))
    acceptance = {
        k[len("acceptance_"):]: float(v) for k, v in meta.items() if k.startswith("acceptance_")
    }
    chain_meta = ChainMeta(
        n=int(meta["n"]),
        d=int(meta["d"]),
        q=int(meta["q"]),
        latent_dim=int(meta["latent_dim"]),
        layers=model.layers,
        x_bounds=train.x_bounds,
        y_center=train.y_center,
        y_scale=train.y_scale,
    )
    chain = Chain(
        samples=tuple(samples), config=cfg, model=model, meta=chain_meta, acceptance=acceptance
    )
    return chain, train

