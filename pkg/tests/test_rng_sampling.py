import numpy as np
import pytest

from cclt import build_model
from cclt.rng import chunk_sizes, map_chunks, substream
from cclt.sampling import RareEventError, check_acceptance, draw_given_count


def _sum_chunk(rng, size):
    return rng.random(size).sum()


def test_substreams_are_addressed_not_sequenced():
    a = substream(5, 1, 2).random(3)
    substream(5, 9).random(100)
    assert np.array_equal(a, substream(5, 1, 2).random(3))
    assert not np.array_equal(a, substream(5, 1, 3).random(3))


def test_chunking_is_independent_of_workers():
    one = map_chunks(_sum_chunk, 10_000, 4, stream=(1,), chunk=1000, workers=1)
    two = map_chunks(_sum_chunk, 10_000, 4, stream=(1,), chunk=1000, workers=2)
    assert one == two
    assert chunk_sizes(2500, 1000) == [1000, 1000, 500]


def test_generic_rejection_draws_exact_count():
    model = build_model("evenodd11", n=10, p=0.3)
    configs, attempts = draw_given_count(model, np.random.default_rng(0), 300, 5)
    assert len(configs) == 300 and attempts >= 300
    assert np.all(model.counts(configs) == 5)


def test_pilot_refuses_impossible_events():
    model = build_model("evenodd11", n=60, p=0.2)
    with pytest.raises(RareEventError, match="too rare"):
        check_acceptance(model, (60,), np.random.default_rng(0))
