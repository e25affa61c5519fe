from __future__ import annotations

import json

import pytest

from synthdata import build_degraded_dataset


@pytest.fixture(scope="session")
def small_trained_model(tmp_path_factory):
    """A quickly-trained model over 10 small phantom pairs, shared by tests."""
    from enhancer.train import EnhancerConfig, train

    root = tmp_path_factory.mktemp("small")
    manifest = build_degraded_dataset(root, 10)
    mp = root / "manifest.json"
    mp.write_text(json.dumps(manifest))
    cfg = EnhancerConfig(patch_size=(16, 16, 16), epochs=6, iters_per_epoch=20,
                         seed=0)
    model_path = train(mp, cfg, root / "model.pt")
    return {"model": model_path, "manifest": manifest, "root": root}
