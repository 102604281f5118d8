"""Plain-text ``key = value`` model files.

Every file starts with a ``kind`` line (``gmm``, ``rbf``, ``ofs-rbf`` or
``ofs-rbf-ovr``). Reals are written with 17 significant digits, so a save and
load round-trips float64 exactly. Vectors are space separated; a 2x2
covariance is stored row-major as four numbers.

Example (one class of a GMM)::

    kind = gmm
    covariance = full
    k = 2
    classes = 10
    prior.0 = 0.10059171597633136
    mixture.0.weight.0 = 0.54504640837616318
    mixture.0.mean.0 = 302.1875 2680.40625
    mixture.0.cov.0 = 1498.2 388.1 388.1 41002.5
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .gmm import GaussianComponent, GaussianMixture, GmmClassifier
from .ofs_rbf import OfsRbfModel, OvrEnsemble, TunableNeuron
from .rbf import RbfNetwork


def _num(x) -> str:
    return format(float(x), ".17g")


def _vec(v) -> str:
    return " ".join(_num(x) for x in np.ravel(v))


def _parse(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"model file line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _arr(s: str) -> np.ndarray:
    return np.array([float(x) for x in s.split()]) if s else np.zeros(0)


# ---------------------------------------------------------------------------


def _dump_gmm(clf: GmmClassifier) -> list[str]:
    lines = [f"covariance = {clf.kind}", f"k = {clf.k}", f"classes = {len(clf.mixtures)}"]
    for c, (p, gm) in enumerate(zip(clf.priors, clf.mixtures)):
        lines.append(f"prior.{c} = {_num(p)}")
        for j, (w, comp) in enumerate(zip(gm.weights, gm.components)):
            lines += [f"mixture.{c}.weight.{j} = {_num(w)}",
                      f"mixture.{c}.mean.{j} = {_vec(comp.mean)}",
                      f"mixture.{c}.cov.{j} = {_vec(comp.cov)}"]
    return lines


def _load_gmm(kv) -> GmmClassifier:
    kind, k, nc = kv["covariance"], int(kv["k"]), int(kv["classes"])
    mixtures, priors = [], []
    for c in range(nc):
        priors.append(float(kv[f"prior.{c}"]))
        comps, ws = [], []
        for j in range(k):
            mean = _arr(kv[f"mixture.{c}.mean.{j}"])
            cov = _arr(kv[f"mixture.{c}.cov.{j}"]).reshape(len(mean), len(mean))
            comps.append(GaussianComponent(mean, cov))
            ws.append(float(kv[f"mixture.{c}.weight.{j}"]))
        mixtures.append(GaussianMixture(tuple(comps), np.array(ws), kind))
    return GmmClassifier(tuple(mixtures), np.array(priors))


def _dump_rbf(net: RbfNetwork) -> list[str]:
    lines = [f"hidden = {net.n_hidden}", f"outputs = {len(net.bias)}", f"width = {_num(net.width)}",
             f"normalize = {int(net.input_shift is not None)}"]
    if net.input_shift is not None:
        lines += [f"input_shift = {_vec(net.input_shift)}", f"input_scale = {_vec(net.input_scale)}"]
    lines += [f"center.{j} = {_vec(c)}" for j, c in enumerate(net.centers)]
    lines += [f"weight.{j} = {_vec(w)}" for j, w in enumerate(net.output_weights)]
    lines.append(f"bias = {_vec(net.bias)}")
    return lines


def _load_rbf(kv) -> RbfNetwork:
    M = int(kv["hidden"])
    shift = scale = None
    if kv.get("normalize", "0") == "1":
        shift, scale = _arr(kv["input_shift"]), _arr(kv["input_scale"])
    return RbfNetwork(
        centers=np.array([_arr(kv[f"center.{j}"]) for j in range(M)]),
        width=float(kv["width"]),
        output_weights=np.array([_arr(kv[f"weight.{j}"]) for j in range(M)]),
        bias=_arr(kv["bias"]),
        input_shift=shift,
        input_scale=scale,
    )


def _dump_ofs(m: OfsRbfModel, prefix: str = "") -> list[str]:
    lines = [f"{prefix}neurons = {m.n_neurons}", f"{prefix}lambda = {_num(m.lam)}",
             f"{prefix}weights = {_vec(m.weights)}", f"{prefix}loo_trace = {_vec(m.loo_trace)}"]
    for j, nr in enumerate(m.neurons):
        lines += [f"{prefix}center.{j} = {_vec(nr.center)}", f"{prefix}spread.{j} = {_num(nr.spread)}"]
    return lines


def _load_ofs(kv, prefix: str = "") -> OfsRbfModel:
    M = int(kv[f"{prefix}neurons"])
    neurons = tuple(TunableNeuron(_arr(kv[f"{prefix}center.{j}"]), float(kv[f"{prefix}spread.{j}"]))
                    for j in range(M))
    return OfsRbfModel(neurons, _arr(kv[f"{prefix}weights"]), float(kv[f"{prefix}lambda"]),
                       tuple(_arr(kv[f"{prefix}loo_trace"])))


def _dump_ovr(ens: OvrEnsemble) -> list[str]:
    lines = [f"models = {len(ens.models)}", f"threshold = {_num(ens.threshold)}",
             f"train_acc = {_vec(ens.train_acc)}", f"test_acc = {_vec(ens.test_acc)}"]
    for c, m in enumerate(ens.models):
        lines += _dump_ofs(m, f"model.{c}.")
    return lines


def _load_ovr(kv) -> OvrEnsemble:
    n = int(kv["models"])
    models = tuple(_load_ofs(kv, f"model.{c}.") for c in range(n))
    return OvrEnsemble(models, _arr(kv["train_acc"]), _arr(kv["test_acc"]), np.zeros(n),
                       float(kv["threshold"]))


_KINDS = {
    GmmClassifier: ("gmm", _dump_gmm),
    RbfNetwork: ("rbf", _dump_rbf),
    OfsRbfModel: ("ofs-rbf", _dump_ofs),
    OvrEnsemble: ("ofs-rbf-ovr", _dump_ovr),
}
_LOADERS = {"gmm": _load_gmm, "rbf": _load_rbf, "ofs-rbf": _load_ofs, "ofs-rbf-ovr": _load_ovr}


def dumps(model) -> str:
    try:
        tag, dump = _KINDS[type(model)]
    except KeyError:
        raise TypeError(f"cannot serialize {type(model).__name__}") from None
    return "\n".join([f"kind = {tag}", *dump(model)]) + "\n"


def loads(text: str):
    kv = _parse(text)
    kind = kv.get("kind")
    if kind not in _LOADERS:
        raise ValueError(f"unknown model kind {kind!r}")
    return _LOADERS[kind](kv)


def save(model, path) -> None:
    Path(path).write_text(dumps(model))


def load(path):
    return loads(Path(path).read_text())
