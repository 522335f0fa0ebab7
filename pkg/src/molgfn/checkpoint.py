"""Self-describing checkpoint container (.npz).

Holds parameter arrays, Adam moments, the step counter, RNG seed info and
the config fingerprint, all as 64-bit arrays plus a JSON metadata record.
"""

from __future__ import annotations

import json

import numpy as np
import torch

from .errors import CheckpointMismatch

FORMAT_VERSION = 1


def save_checkpoint(path, net, opt_state, step: int, cfg, extra: dict | None = None) -> None:
    arrays = {}
    shapes = {}
    for name, p in net.named_parameters():
        arrays[f"param/{name}"] = p.detach().numpy().astype(np.float64)
        shapes[name] = list(p.shape)
    if opt_state is not None:
        for name, t in opt_state.m.items():
            arrays[f"adam_m/{name}"] = t.numpy().astype(np.float64)
        for name, t in opt_state.v.items():
            arrays[f"adam_v/{name}"] = t.numpy().astype(np.float64)
    meta = {
        "version": FORMAT_VERSION,
        "step": step,
        "config_fingerprint": cfg.fingerprint(),
        "random_seed": cfg.random_seed,
        "dims": {
            "num_emb": cfg.num_emb,
            "num_layers": cfg.num_layers,
            "num_mlp_layers": cfg.num_mlp_layers,
            "num_heads": cfg.num_heads,
            "num_properties": len(cfg.properties),
        },
        "param_shapes": shapes,
        "extra": extra or {},
    }
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_meta(path) -> dict:
    with np.load(path) as z:
        return json.loads(bytes(z["meta"]).decode())


def load_checkpoint(path, net, opt_state=None, cfg=None, strict_fingerprint: bool = False) -> dict:
    """Restore parameters (and moments, when ``opt_state`` given) in place."""
    with np.load(path) as z:
        meta = json.loads(bytes(z["meta"]).decode())
        if meta["version"] != FORMAT_VERSION:
            raise CheckpointMismatch(f"unsupported checkpoint version {meta['version']}")
        if cfg is not None:
            dims = meta["dims"]
            want = {
                "num_emb": cfg.num_emb,
                "num_layers": cfg.num_layers,
                "num_mlp_layers": cfg.num_mlp_layers,
                "num_heads": cfg.num_heads,
                "num_properties": len(cfg.properties),
            }
            if dims != want:
                raise CheckpointMismatch(f"checkpoint dims {dims} != config dims {want}")
            if strict_fingerprint and meta["config_fingerprint"] != cfg.fingerprint():
                raise CheckpointMismatch("config fingerprint mismatch")
        with torch.no_grad():
            for name, p in net.named_parameters():
                key = f"param/{name}"
                if key not in z:
                    raise CheckpointMismatch(f"checkpoint misses parameter {name}")
                arr = z[key]
                if list(arr.shape) != list(p.shape):
                    raise CheckpointMismatch(
                        f"{name}: checkpoint shape {arr.shape} != model shape {tuple(p.shape)}"
                    )
                p.copy_(torch.from_numpy(arr))
        if opt_state is not None:
            for name in opt_state.m:
                opt_state.m[name] = torch.from_numpy(z[f"adam_m/{name}"]).clone()
                opt_state.v[name] = torch.from_numpy(z[f"adam_v/{name}"]).clone()
            opt_state.step = meta["step"]
    return meta
