"""Line-oriented text format for trees, ensembles, and fitted models.

Layout::

    obliquebart v1
    config M=50 alpha=0.95 ... mode=oblique
    scaling task=regression y_center=... y_scale=... burn=...
    schema {...json...}            (optional)
    draws <count>
    draw <k> sigma2=<v> theta=<v>
    <one line per tree>

A tree line lists its nodes in pre-order, separated by `` ; ``::

    D <p> <cutpoint> <phi_1> ... <phi_p>     continuous decision
    K <index> {<code>,<code>,...}            categorical decision
    L <mu>                                   leaf

Floats are written with 17 significant digits, so values round-trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

import numpy as np

from .data import Standardizer
from .sampler import Task
from .tree import CategoricalRule, ContinuousRule, DecisionTree, Ensemble, EnsembleConfig, Mode

HEADER = "obliquebart v1"


class FormatError(ValueError):
    pass


def _f(x: float) -> str:
    return format(float(x), ".17g")


def dump_tree(tree: DecisionTree) -> str:
    records = []
    for node in tree.preorder():
        rule = node.rule
        if rule is None:
            records.append(f"L {_f(node.mu)}")
        elif isinstance(rule, ContinuousRule):
            phi = " ".join(_f(v) for v in rule.phi)
            records.append(f"D {rule.phi.size} {_f(rule.cutpoint)} {phi}")
        else:
            levels = ",".join(str(v) for v in sorted(rule.levels))
            records.append(f"K {rule.index} {{{levels}}}")
    return " ; ".join(records)


def load_tree(line: str) -> DecisionTree:
    records = iter(r.split() for r in line.strip().split(" ; "))
    tree = DecisionTree()

    def build(node_id: int) -> None:
        try:
            rec = next(records)
        except StopIteration:
            raise FormatError("tree line ended early") from None
        kind = rec[0]
        if kind == "L":
            tree.nodes[node_id].mu = float(rec[1])
            return
        if kind == "D":
            p = int(rec[1])
            if len(rec) != 3 + p:
                raise FormatError(f"bad continuous record {' '.join(rec)!r}")
            rule = ContinuousRule(np.array([float(v) for v in rec[3:]]), float(rec[2]))
        elif kind == "K":
            body = rec[2].strip("{}")
            levels = frozenset(int(v) for v in body.split(",")) if body else frozenset()
            rule = CategoricalRule(int(rec[1]), levels)
        else:
            raise FormatError(f"unknown node record {kind!r}")
        left, right = tree.grow(node_id, rule)
        build(left)
        build(right)

    build(tree.root)
    if next(records, None) is not None:
        raise FormatError("trailing records in tree line")
    return tree


def dump_config(config: EnsembleConfig) -> str:
    n_levels = ",".join(str(k) for k in config.n_levels) or "-"
    pc = "none" if config.prob_categorical is None else _f(config.prob_categorical)
    return (
        f"config M={config.M} alpha={_f(config.alpha)} beta={_f(config.beta)} "
        f"tau={_f(config.tau)} nu={_f(config.nu)} lam={_f(config.lam)} "
        f"a_theta={_f(config.a_theta)} b_theta={_f(config.b_theta)} "
        f"p_cont={config.p_cont} n_levels={n_levels} mode={config.mode.value} "
        f"prob_categorical={pc}"
    )


def _fields(line: str, tag: str) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != tag:
        raise FormatError(f"expected a {tag!r} line, got {line[:40]!r}")
    return dict(p.split("=", 1) for p in parts[1:] if "=" in p)


def load_config(line: str) -> EnsembleConfig:
    d = _fields(line, "config")
    n_levels = () if d["n_levels"] == "-" else tuple(int(k) for k in d["n_levels"].split(","))
    pc = None if d["prob_categorical"] == "none" else float(d["prob_categorical"])
    return EnsembleConfig(
        M=int(d["M"]),
        alpha=float(d["alpha"]),
        beta=float(d["beta"]),
        tau=float(d["tau"]),
        nu=float(d["nu"]),
        lam=float(d["lam"]),
        a_theta=float(d["a_theta"]),
        b_theta=float(d["b_theta"]),
        p_cont=int(d["p_cont"]),
        n_levels=n_levels,
        mode=Mode(d["mode"]),
        prob_categorical=pc,
    )


def dump_ensemble(ens: Ensemble, index: int = 0) -> Iterator[str]:
    yield f"draw {index} sigma2={_f(ens.sigma2)} theta={_f(ens.theta)}"
    for tree in ens.trees:
        yield dump_tree(tree)


def dumps_ensemble(ens: Ensemble) -> str:
    """A single ensemble: header, config, one draw."""
    return "\n".join([HEADER, dump_config(ens.config), *dump_ensemble(ens)]) + "\n"


def loads_ensemble(text: str) -> Ensemble:
    lines = text.splitlines()
    if not lines or lines[0] != HEADER:
        raise FormatError("missing obliquebart header")
    config = load_config(lines[1])
    return _read_draw(lines, 2, config)[0]


def _read_draw(lines: list[str], pos: int, config: EnsembleConfig) -> tuple[Ensemble, int]:
    d = _fields(lines[pos], "draw")
    trees = [load_tree(lines[pos + 1 + m]) for m in range(config.M)]
    return Ensemble(trees, float(d["sigma2"]), float(d["theta"]), config), pos + 1 + config.M


def save_model(samples, path: str | Path) -> None:
    lines = [
        HEADER,
        dump_config(samples.config),
        f"scaling task={samples.task.value} y_center={_f(samples.y_center)} "
        f"y_scale={_f(samples.y_scale)} burn={samples.burn}",
    ]
    if samples.standardizer is not None:
        lines.append("schema " + json.dumps(samples.standardizer.to_dict(), sort_keys=True))
    lines.append(f"draws {len(samples.draws)}")
    for k, ens in enumerate(samples.draws):
        lines.extend(dump_ensemble(ens, k))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path):
    from .model import PosteriorSamples

    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != HEADER:
        raise FormatError(f"{path}: not an obliquebart v1 model file")
    config = load_config(lines[1])
    scaling = _fields(lines[2], "scaling")
    pos = 3
    standardizer = None
    if lines[pos].startswith("schema "):
        standardizer = Standardizer.from_dict(json.loads(lines[pos][len("schema ") :]))
        pos += 1
    count = int(lines[pos].split()[1])
    pos += 1
    draws = []
    for _ in range(count):
        ens, pos = _read_draw(lines, pos, config)
        draws.append(ens)
    return PosteriorSamples(
        draws,
        config,
        Task(scaling["task"]),
        float(scaling["y_center"]),
        float(scaling["y_scale"]),
        [],
        standardizer,
        int(scaling["burn"]),
    )

