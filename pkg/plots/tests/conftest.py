import pytest
from samplegen import (
    write_aggregate,
    write_fieldmap,
    write_spectrum,
    write_trace,
    write_trials,
)


@pytest.fixture
def sample_dir(tmp_path):
    """A directory populated with one CSV of each output schema."""
    write_fieldmap(tmp_path / "fieldmap_yoz.csv")
    write_spectrum(tmp_path / "spectrum.csv")
    write_aggregate(tmp_path / "aggregate.csv")
    write_trials(tmp_path / "trials.csv")
    write_trace(tmp_path / "trace.csv")
    return tmp_path
