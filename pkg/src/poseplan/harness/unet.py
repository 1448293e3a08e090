"""A U-shaped demo graph: encoder/decoder with skip concats, built from
additive-coupling stages so both checkpointing and reversible execution
have something to bite on.  Activation shapes follow the usual pattern of
doubling channels while halving spatial extents per level."""

from __future__ import annotations

from ..graphcore import ComputationGraph, NodeSpec, OpKind


class _Builder:
    def __init__(self, elem_bytes: int):
        self.nodes: list[NodeSpec] = []
        self.eb = elem_bytes
        self._next = 0

    def add(self, op: OpKind, inputs: tuple[int, ...], shape: tuple[int, ...],
            split_half: int = 0) -> int:
        nid = self._next
        self._next += 1
        self.nodes.append(NodeSpec(nid, op, inputs, shape, self.eb, split_half))
        return nid

    def coupling_block(self, src: int, body_len: int = 2) -> int:
        """split/F/add/G/add/concat with affine+nonlinearity bodies."""
        shape = self.nodes[src].shape
        channels = shape[0]
        half = (channels // 2,) + shape[1:]
        lo = self.add(OpKind.SPLIT, (src,), half, split_half=0)
        hi = self.add(OpKind.SPLIT, (src,), half, split_half=1)
        cur = hi
        for step in range(body_len):
            cur = self.add(OpKind.AFFINE if step % 2 == 0 else OpKind.NONLINEARITY,
                           (cur,), half)
        y1 = self.add(OpKind.ADD, (lo, cur), half)
        cur = y1
        for step in range(body_len):
            cur = self.add(OpKind.AFFINE if step % 2 == 0 else OpKind.NONLINEARITY,
                           (cur,), half)
        y2 = self.add(OpKind.ADD, (hi, cur), half)
        return self.add(OpKind.CONCAT, (y1, y2), shape)


def build_unet_graph(
    spatial: tuple[int, ...] = (16, 12, 12),
    base_channels: int = 8,
    levels: int = 2,
    blocks_per_stage: int = 2,
    out_channels: int = 22,
    elem_bytes: int = 4,
) -> ComputationGraph:
    b = _Builder(elem_bytes)
    x = b.add(OpKind.INPUT, (), (1,) + tuple(spatial))
    cur_sp = tuple(spatial)
    ch = base_channels
    x = b.add(OpKind.AFFINE, (x,), (ch,) + cur_sp)  # stem

    skips: list[tuple[int, int, tuple[int, ...]]] = []
    for _ in range(levels):
        for _ in range(blocks_per_stage):
            x = b.coupling_block(x)
        skips.append((x, ch, cur_sp))
        x = b.add(OpKind.DOWNSAMPLE, (x,), (ch,) + tuple(s // 2 for s in cur_sp))
        cur_sp = tuple(s // 2 for s in cur_sp)
        ch *= 2
        x = b.add(OpKind.AFFINE, (x,), (ch,) + cur_sp)

    for _ in range(blocks_per_stage):
        x = b.coupling_block(x)

    for skip, skip_ch, skip_sp in reversed(skips):
        x = b.add(OpKind.UPSAMPLE, (x,), (ch,) + skip_sp)
        ch = skip_ch
        x = b.add(OpKind.AFFINE, (x,), (ch,) + skip_sp)
        x = b.add(OpKind.CONCAT, (skip, x), (2 * ch,) + skip_sp)
        x = b.add(OpKind.AFFINE, (x,), (ch,) + skip_sp)
        for _ in range(blocks_per_stage):
            x = b.coupling_block(x)
        cur_sp = skip_sp

    x = b.add(OpKind.AFFINE, (x,), (out_channels,) + cur_sp)  # heatmap head
    b.add(OpKind.OUTPUT, (x,), (out_channels,) + cur_sp)
    return ComputationGraph(tuple(b.nodes))
