"""Basic blocks and intra-unit control-flow graphs.

Leaders are the first opline, every jump target, and every opline that
follows a jump.  RETURN and EXIT count as jumps (to the unit exit).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .ir import OpcodeKind, OpUnit


class CfgError(ValueError):
    pass


class EdgeKind(enum.Enum):
    FALLTHROUGH = "FALLTHROUGH"
    JUMP = "JUMP"
    BRANCH_TRUE = "BRANCH_TRUE"
    BRANCH_FALSE = "BRANCH_FALSE"


@dataclass
class BasicBlock:
    id: int
    start: int
    end_exclusive: int
    successors: list = field(default_factory=list)   # (block id, EdgeKind)

    def __len__(self):
        return self.end_exclusive - self.start


@dataclass
class Cfg:
    unit: OpUnit
    blocks: list
    entry: int = 0
    block_of: list = field(default_factory=list)     # opline index -> block id

    def block_at(self, index: int) -> BasicBlock:
        return self.blocks[self.block_of[index]]

    def predecessors(self) -> dict:
        preds = {b.id: [] for b in self.blocks}
        for b in self.blocks:
            for succ, kind in b.successors:
                preds[succ].append((b.id, kind))
        return preds


def leaders(unit: OpUnit) -> list:
    ops = unit.oplines
    if not ops:
        return []
    out = {0}
    for i, op in enumerate(ops):
        target = op.jump_target()
        if target is not None:
            if target >= len(ops):
                raise CfgError(f"opline {i}: jump target {target} beyond unit end")
            out.add(target)
        if op.opcode.is_jump and i + 1 < len(ops):
            out.add(i + 1)
    return sorted(out)


def build_cfg(unit: OpUnit) -> Cfg:
    ops = unit.oplines
    starts = leaders(unit)
    if not starts:
        return Cfg(unit, [BasicBlock(0, 0, 0)], 0, [])
    bounds = starts + [len(ops)]
    blocks = [BasicBlock(i, bounds[i], bounds[i + 1]) for i in range(len(starts))]
    block_of = [0] * len(ops)
    for b in blocks:
        for i in range(b.start, b.end_exclusive):
            block_of[i] = b.id
    for b in blocks:
        last = ops[b.end_exclusive - 1]
        k = last.opcode
        nxt = b.id + 1 if b.id + 1 < len(blocks) else None
        if k is OpcodeKind.RETURN or k is OpcodeKind.EXIT:
            continue
        target = last.jump_target()
        if k is OpcodeKind.JMP:
            b.successors.append((block_of[target], EdgeKind.JUMP))
        elif k is OpcodeKind.JMPZ:
            # falls through when the condition is true
            if nxt is not None:
                b.successors.append((nxt, EdgeKind.BRANCH_TRUE))
            b.successors.append((block_of[target], EdgeKind.BRANCH_FALSE))
        elif k is OpcodeKind.JMPNZ:
            b.successors.append((block_of[target], EdgeKind.BRANCH_TRUE))
            if nxt is not None:
                b.successors.append((nxt, EdgeKind.BRANCH_FALSE))
        elif k is OpcodeKind.FE_FETCH:
            # the iterator is exhausted: jump; otherwise the body runs
            if nxt is not None:
                b.successors.append((nxt, EdgeKind.BRANCH_TRUE))
            b.successors.append((block_of[target], EdgeKind.BRANCH_FALSE))
        elif nxt is not None:
            b.successors.append((nxt, EdgeKind.FALLTHROUGH))
    return Cfg(unit, blocks, 0, block_of)


def dump_cfg_dot(cfg: Cfg) -> bytes:
    name = cfg.unit.name.replace("\\", "\\\\").replace('"', '\\"')
    out = [f'digraph "{name}" {{', "  node [shape=box];"]
    for b in cfg.blocks:
        label = f"B{b.id} [{b.start}..{b.end_exclusive})"
        out.append(f'  B{b.id} [label="{label}"];')
    for b in cfg.blocks:
        for succ, kind in b.successors:
            out.append(f'  B{b.id} -> B{succ} [label="{kind.value}"];')
    out.append("}")
    return ("\n".join(out) + "\n").encode("utf-8")


def back_edges(cfg: Cfg) -> list:
    """Edges whose target starts at or before the source block (loop edges)."""
    return [(b.id, s) for b in cfg.blocks for s, _ in b.successors
            if cfg.blocks[s].start <= b.start]
