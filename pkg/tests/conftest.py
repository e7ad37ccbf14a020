import random

import pytest

from trunclab.config import RunConfig


@pytest.fixture
def rng():
    return random.Random(20240229)


@pytest.fixture
def make_config(tmp_path):
    def factory(command, environ=None, **args):
        overrides = {"out_dir": str(tmp_path)}
        for name in ("threads", "seed", "segment_size", "sample_every", "flush_every", "node_budget"):
            if name in args:
                overrides[name] = args.pop(name)
        return RunConfig.from_sources(command, overrides, args, environ or {})

    return factory
