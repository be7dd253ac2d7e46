import numpy as np
import pytest

HEADER = "t,stroke,U,S,W,Q_a,Q_f,P_inst,P_av,P_c_av,pop_g0,pop_e0,pop_g1"


def synthetic_rows(n=200, strokes=("hot_isochore", "work_extraction")):
    rng = np.random.default_rng(11)
    rows = []
    t = 0.0
    for stroke in strokes:
        w = 0.0
        for _ in range(n // len(strokes)):
            t += 0.5
            w += -1e-3 + 1e-4 * rng.standard_normal()
            u = -0.9 + w
            vals = (t, u, 0.3, w, 0.0, 0.0, -1e-3, w / max(t, 1e-9),
                    1e-5 * np.sin(t), 0.6, 0.4, 0.0)
            rows.append(f"{vals[0]},{stroke}," + ",".join(f"{v:.9g}" for v in vals[1:]))
    return rows


@pytest.fixture()
def stroke_csv(tmp_path):
    p = tmp_path / "stroke.csv"
    p.write_text("\n".join([HEADER] + synthetic_rows()) + "\n")
    return p


@pytest.fixture()
def empty_csv(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    return p


@pytest.fixture()
def header_only_csv(tmp_path):
    p = tmp_path / "header.csv"
    p.write_text(HEADER + "\n")
    return p


@pytest.fixture()
def missing_column_csv(tmp_path):
    # drop the P_c_av column everywhere
    header = HEADER.split(",")
    drop = header.index("P_c_av")
    rows = []
    for line in synthetic_rows():
        cells = line.split(",")
        del cells[drop]
        rows.append(",".join(cells))
    del header[drop]
    p = tmp_path / "missing.csv"
    p.write_text("\n".join([",".join(header)] + rows) + "\n")
    return p
