"""Experiment configuration: defaults, TOML files, environment overrides.

Precedence, lowest first: built-in defaults, the config file, environment
variables, command-line flags. An environment variable
``LOGGAS_<SECTION>__<KEY>`` sets ``[section] key``; ``LOGGAS_<KEY>`` sets a
top-level key. Values are parsed as TOML literals when possible
(``LOGGAS_SAMPLE__N=200``, ``LOGGAS_SOBOLEV__K='[128, 256]'``).
"""
import copy
import os
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

ENV_PREFIX = "LOGGAS_"
KINDS = ("equilibrium", "sample", "dbm", "rwcheck", "airy", "stats", "sobolev", "acceptance-suite")

DEFAULTS = {
    "experiment": "equilibrium",
    "seed": None,
    "threads": 0,
    "out": "runs/out",
    "csv": False,
    "potential": {"kind": "quadratic", "c": 0.5, "coeffs": []},
    "equilibrium": {"tol": 1e-12, "order": 128, "grid": 401},
    "sample": {"sampler": "tridiag", "N": 100, "beta": 2.0, "n_samples": 1000, "select": [],
               "burn_in": 2000, "thin": 10, "n_chains": 1, "precondition": "hessian",
               "profile": "constant", "dist": "gaussian", "symmetry": "real", "K": 4, "xi": 0.1},
    "dbm": {"N": 50, "beta": 2.0, "T": 1.0, "dt": 1e-3, "store_every": 100},
    "rwcheck": {"N": 64, "K": 2, "xi": 0.1, "beta": 2.0, "T": 1.0, "dt": 0.01, "n_paths": 10000,
                "burn_in": 2000, "thin": 10},
    "airy": {"beta": 2.0, "L": 16.0, "n": 4000, "n_draws": 1000, "m": 1, "compare_N": 0},
    "stats": {"kind": "rigidity", "N": 1000, "beta": 2.0, "n_samples": 500, "xi": 0.2, "i": 64,
              "j": [32, 128, 512], "z": [1.0, 0.5], "gap_range": [0.25, 0.75]},
    "sobolev": {"form": "first", "K": [128, 256, 512], "eta": 0.1, "M": [64, 256, 1024], "restarts": 32},
    "acceptance": {"level": "quick", "criteria": []},
}

# (type, low, high) or a tuple of choices; lists check each element
_INT, _FLOAT = int, float
RULES = {
    "experiment": KINDS,
    "seed": (_INT, 0, 2**63 - 1),
    "threads": (_INT, 0, 1024),
    "out": str,
    "csv": bool,
    "potential.kind": ("quadratic", "polynomial"),
    "potential.c": (_FLOAT, 1e-12, 1e12),
    "potential.coeffs": [(_FLOAT, -1e12, 1e12)],
    "equilibrium.tol": (_FLOAT, 1e-15, 1e-3),
    "equilibrium.order": (_INT, 8, 4096),
    "equilibrium.grid": (_INT, 2, 100000),
    "sample.sampler": ("tridiag", "mala", "wigner", "local"),
    "sample.N": (_INT, 1, 10**5),
    "sample.beta": (_FLOAT, 1e-6, 1e6),
    "sample.n_samples": (_INT, 1, 10**7),
    "sample.select": [(_INT, 1, 10**5)],
    "sample.burn_in": (_INT, 1, 10**8),
    "sample.thin": (_INT, 1, 10**6),
    "sample.n_chains": (_INT, 1, 1024),
    "sample.precondition": ("hessian", "diagonal", "none"),
    "sample.profile": ("constant", "two_band"),
    "sample.dist": ("gaussian", "bernoulli", "laplace"),
    "sample.symmetry": ("real", "hermitian"),
    "sample.K": (_INT, 1, 4096),
    "sample.xi": (_FLOAT, 1e-6, 0.5),
    "dbm.N": (_INT, 1, 10**5),
    "dbm.beta": (_FLOAT, 1.0, 1e6),
    "dbm.T": (_FLOAT, 1e-12, 1e6),
    "dbm.dt": (_FLOAT, 1e-12, 1.0),
    "dbm.store_every": (_INT, 1, 10**9),
    "rwcheck.N": (_INT, 4, 10**5),
    "rwcheck.K": (_INT, 2, 64),
    "rwcheck.xi": (_FLOAT, 1e-6, 0.5),
    "rwcheck.beta": (_FLOAT, 1.0, 1e6),
    "rwcheck.T": (_FLOAT, 1e-6, 100.0),
    "rwcheck.dt": (_FLOAT, 1e-8, 1.0),
    "rwcheck.n_paths": (_INT, 100, 10**8),
    "rwcheck.burn_in": (_INT, 1, 10**8),
    "rwcheck.thin": (_INT, 1, 10**6),
    "airy.beta": (_FLOAT, 1e-6, float("inf")),
    "airy.L": (_FLOAT, 10.0, 1e4),
    "airy.n": (_INT, 100, 10**7),
    "airy.n_draws": (_INT, 1, 10**7),
    "airy.m": (_INT, 1, 10),
    "airy.compare_N": (_INT, 0, 10**5),
    "stats.kind": ("rigidity", "gaussian", "repulsion", "loop", "decay", "universality"),
    "stats.N": (_INT, 2, 10**5),
    "stats.beta": (_FLOAT, 1e-6, 1e6),
    "stats.n_samples": (_INT, 2, 10**7),
    "stats.xi": (_FLOAT, 1e-6, 1.0),
    "stats.i": (_INT, 2, 10**5),
    "stats.j": [(_INT, 1, 10**5)],
    "stats.z": [(_FLOAT, -1e6, 1e6)],
    "stats.gap_range": [(_FLOAT, 0.0, 1.0)],
    "sobolev.form": ("first", "second"),
    "sobolev.K": [(_INT, 2, 4096)],
    "sobolev.eta": (_FLOAT, 1e-6, 0.4999),
    "sobolev.M": [(_INT, 2, 4096)],
    "sobolev.restarts": (_INT, 1, 10**4),
    "acceptance.level": ("quick", "full"),
    "acceptance.criteria": [(_INT, 1, 14)],
}


def _merge(base, extra, where=""):
    for k, v in extra.items():
        path = f"{where}{k}"
        if k not in base:
            raise ConfigError(f"{path}: unknown key")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{path}: expected a table")
            _merge(base[k], v, path + ".")
        else:
            base[k] = v
    return base


def _parse_literal(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def env_overrides(environ=None):
    env = os.environ if environ is None else environ
    out = {}
    for name, val in env.items():
        if not name.startswith(ENV_PREFIX) or name == "LOGGAS_DISABLE_NUMBA":
            continue
        key = name[len(ENV_PREFIX):].lower()
        if "__" in key:
            sec, sub = key.split("__", 1)
            if sec not in DEFAULTS or not isinstance(DEFAULTS[sec], dict):
                raise ConfigError(f"{name}: unknown section {sec!r}")
            sub = next((k for k in DEFAULTS[sec] if k.lower() == sub), sub)
            out.setdefault(sec, {})[sub] = _parse_literal(val)
        else:
            out[key] = _parse_literal(val)
    return out


def _check_scalar(path, v, rule):
    if isinstance(rule, tuple) and rule and isinstance(rule[0], str):
        if v not in rule:
            raise ConfigError(f"{path}: {v!r} is not one of {', '.join(rule)}")
        return v
    if rule is str:
        if not isinstance(v, str) or not v:
            raise ConfigError(f"{path}: expected a non-empty string")
        return v
    if rule is bool:
        if not isinstance(v, bool):
            raise ConfigError(f"{path}: expected true or false")
        return v
    typ, lo, hi = rule
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if typ is int:
        if float(v) != int(v):
            raise ConfigError(f"{path}: expected an integer, got {v!r}")
        v = int(v)
    else:
        v = float(v)
    if not lo <= v <= hi:
        raise ConfigError(f"{path}: {v} outside [{lo}, {hi}]")
    return v


def validate(cfg):
    """Check every field against RULES; returns a normalized copy."""
    cfg = copy.deepcopy(cfg)
    for path, rule in RULES.items():
        parts = path.split(".")
        holder = cfg if len(parts) == 1 else cfg[parts[0]]
        v = holder[parts[-1]]
        if path == "seed" and v is None:
            if cfg["experiment"] != "acceptance-suite":
                raise ConfigError("seed: mandatory (set it in the config, via LOGGAS_SEED or --seed)")
            continue
        if isinstance(rule, list):
            if not isinstance(v, list):
                raise ConfigError(f"{path}: expected a list")
            holder[parts[-1]] = [_check_scalar(f"{path}[{i}]", x, rule[0]) for i, x in enumerate(v)]
        else:
            holder[parts[-1]] = _check_scalar(path, v, rule)
    if cfg["potential"]["kind"] == "polynomial" and not cfg["potential"]["coeffs"]:
        raise ConfigError("potential.coeffs: required for a polynomial potential")
    if len(cfg["stats"]["z"]) != 2 or cfg["stats"]["z"][1] == 0:
        raise ConfigError("stats.z: expected [re, im] with im != 0")
    return cfg


def load_config(path=None, overrides=None, environ=None):
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        _merge(cfg, data)
    _merge(cfg, env_overrides(environ))
    _merge(cfg, overrides or {})
    return validate(cfg)


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)


def dumps(cfg):
    """TOML text for a config dict (scalars, lists and one level of tables)."""
    lines = [f"# {k} = <required>" if v is None else f"{k} = {_toml_value(v)}"
             for k, v in cfg.items() if not isinstance(v, dict)]
    for k, v in cfg.items():
        if isinstance(v, dict):
            lines.append(f"\n[{k}]")
            lines += [f"{kk} = {_toml_value(vv)}" for kk, vv in v.items()]
    return "\n".join(lines) + "\n"
