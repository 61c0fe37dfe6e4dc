import numpy as np
import pytest

from obstaclelab.config import ExperimentConfig, format_config, load_config, parse_config_text, parse_value
from obstaclelab.formats import format_measure, parse_measure, read_measure, write_measure
from obstaclelab.measure import Atom, CurvePiece, Density, Measure


def test_parse_measure_records():
    text = """
    # a signed planar datum
    dimension 2
    domain 0 1 0 1
    atom 0.5 0.5 -1.0
    curve 2.0 0.1 0.1 0.5 0.2 0.9 0.9
    density sine(1.0)
    density constant(0.5)   # summed with the line above
    """
    mu = parse_measure(text)
    assert mu.atoms == (Atom((0.5, 0.5), -1.0),)
    assert mu.curves[0].polyline == ((0.1, 0.1), (0.5, 0.2), (0.9, 0.9))
    assert mu.curves[0].linear_density == 2.0
    assert mu.density(np.array([[0.5, 0.5]]))[0] == pytest.approx(1.5)


def test_measure_file_roundtrip(tmp_path):
    mu = Measure(
        3,
        (Atom((0.0, 0.0, 0.0), 1.0),),
        (CurvePiece(((0.0, 0.0, -0.5), (0.0, 0.0, 0.5)), 1.0),),
        Density.affine(1.0, 0.1, 0.2, 0.3),
        ((-1.0, 1.0),) * 3,
    )
    path = tmp_path / "mu.txt"
    write_measure(mu, path)
    back = read_measure(path)
    assert back.atoms == mu.atoms and back.curves == mu.curves and back.domain == mu.domain
    assert format_measure(back) == format_measure(mu)


@pytest.mark.parametrize(
    "text",
    ["atom 0.5 0.5 1", "dimension 2\natom 0.5 1", "dimension 2\nblob 1", "dimension 2\ncurve 1 0.5 0.5", ""],
)
def test_parse_measure_errors(text):
    with pytest.raises(ValueError):
        parse_measure(text)


def test_config_defaults_and_validation():
    cfg = ExperimentConfig()
    assert cfg.grid_sizes == (33, 65, 129) and cfg.k == 0.35 and cfg.y == (0.5, 0.5)
    assert ExperimentConfig(experiment="capacity").grid_sizes == (16, 32, 64, 128, 256)
    for bad in ({"grid_sizes": (64, 32)}, {"k": 0.0}, {"y": (1.0, 0.5)}, {"experiment": "nope"}, {"radii": (0.1, 0.2)}):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# study\nexperiment = capacity\ngrid_sizes = 8, 16\nk = 0.2  # level\nradii = ladder:2:4\n")
    cfg = load_config(path, k=0.5)
    assert cfg.experiment == "capacity" and cfg.grid_sizes == (8, 16)
    assert cfg.k == 0.5
    assert cfg.radii == (0.25, 0.125, 0.0625)
    assert parse_config_text(format_config(cfg)) == dict(cfg.items())
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.cfg")
    with pytest.raises(ValueError):
        parse_config_text("colour = red\n")
    with pytest.raises(ValueError):
        parse_config_text("k 0.3\n")
    assert parse_value("y", "0.1, 0.2") == (0.1, 0.2)
