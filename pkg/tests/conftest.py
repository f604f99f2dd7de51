import shutil
from pathlib import Path

import pytest

FIXTURE_DIR = Path(__file__).parent.parent / "fixtures" / "synthetic"


@pytest.fixture(scope="session")
def synthetic_fixture():
    """Path to the shipped two-sector synthetic price fixture."""
    assert (FIXTURE_DIR / "config.yaml").is_file()
    assert (FIXTURE_DIR / "data" / "AAA.csv").is_file()
    return FIXTURE_DIR


@pytest.fixture
def pair_data_dir(tmp_path):
    """Two-asset data set with return variance ratio 4:1 and zero correlation.

    Asset A cycles +1%/-1%; asset B cycles +2%,+2%,-2%,-2% (orthogonal phase),
    so the training covariance is diagonal with var(B) = 4 var(A) and IVP/HRP
    weights are (0.8, 0.2).
    """
    import datetime as dt

    a_steps = [0.01, -0.01, 0.01, -0.01] * 3
    b_steps = [0.02, 0.02, -0.02, -0.02] * 3
    data = tmp_path / "data"
    data.mkdir()
    for name, steps in (("PA", a_steps), ("PB", b_steps)):
        price, prices = 100.0, [100.0]
        for s in steps:
            price *= 1.0 + s
            prices.append(price)
        lines = ["Date,Close"]
        for i, p in enumerate(prices):
            day = dt.date(2021, 1, 1) + dt.timedelta(days=i)
            lines.append(f"{day.isoformat()},{p!r}")
        (data / f"{name}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    config = tmp_path / "config.yaml"
    config.write_text(
        "\n".join(
            [
                "data_dir: data",
                "output_dir: out",
                "train_start: 2021-01-01",
                "train_end: 2021-01-09",  # 9 train prices -> 8 returns (2 cycles)
                "test_end: 2021-01-13",
                "sectors:",
                "  pair: [PA, PB]",
                "methods:",
                "  mvp: {n_samples: 300, seed: 1}",
                "  hrp: {}",
                "  herc: {k: 2}",
                "",
            ]
        ),
        encoding="utf-8",
    )
    return tmp_path


@pytest.fixture
def fixture_copy(synthetic_fixture, tmp_path):
    """Writable copy of the synthetic fixture for tests that mutate it."""
    dest = tmp_path / "synthetic"
    shutil.copytree(synthetic_fixture, dest)
    return dest
