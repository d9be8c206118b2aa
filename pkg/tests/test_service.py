import numpy as np
import pytest
from fastapi.testclient import TestClient

from symode.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"


def test_generate_endpoint(client):
    req = {"equation": "linear_x", "t0": 0.0, "t1": 1.0, "x0": [1.0, 2.0],
           "points": 50, "seed": 1}
    resp = client.post("/generate", json=req)
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["trajectories"]) == 2
    assert len(body["trajectories"][0]["times"]) == 50
    final = body["trajectories"][0]["states"][-1]
    assert final == pytest.approx(np.e, abs=1e-8)


def test_generate_deterministic(client):
    req = {"equation": "riccati", "x0": [0.5], "points": 30,
           "noise_sigma": 1e-3, "seed": 9}
    b1 = client.post("/generate", json=req).json()
    b2 = client.post("/generate", json=req).json()
    assert b1 == b2


def test_generate_rejects_unknown_equation(client):
    resp = client.post("/generate", json={"equation": "vanderpol"})
    assert resp.status_code == 400
    assert "unknown equation" in resp.json()["detail"]


def test_generate_rejects_unknown_keys(client):
    resp = client.post("/generate", json={"equation": "constant", "bogus": 1})
    assert resp.status_code == 422


def test_discover_endpoint_linear_x(client):
    gen = client.post("/generate", json={
        "equation": "linear_x", "t0": 0.0, "t1": 1.5,
        "x0": [0.6, 1.0, 1.7, 2.5], "points": 80, "seed": 2,
    }).json()
    req = {"trajectories": gen["trajectories"], "neighbors": 30,
           "fit_degree": 2, "max_degree": 2,
           "denoise": {"seed": 4, "tau_rel": 0.005}}
    resp = client.post("/discover", json=req)
    assert resp.status_code == 200
    body = resp.json()
    assert body["detected"] is True
    assert body["basis_degree"] == 0
    # time translation: xi_t = 1, xi_x = 0
    assert abs(abs(body["eta_t"][0]) - 1.0) < 1e-6
    assert abs(body["eta_x"][0]) < 1e-6
    assert body["config"]["neighbors"] == 30


def test_discover_rejects_empty(client):
    resp = client.post("/discover", json={"trajectories": []})
    assert resp.status_code == 400


def test_denoise_endpoint(client):
    rng = np.random.default_rng(5)
    g = rng.standard_normal((30, 6))
    u, _, vt = np.linalg.svd(g, full_matrices=False)
    sigma = np.array([4.0, 3.0, 2.5, 2.0, 1.5, 0.0])
    mat = (u * sigma) @ vt + 1e-4 * rng.standard_normal((30, 6))
    resp = client.post("/denoise", json={
        "matrix": mat.tolist(),
        "denoise": {"seed": 3, "tau_rel": 0.02},
    })
    assert resp.status_code == 200
    body = resp.json()
    assert body["deficient_by_one"] is True
    assert body["sigma_raw"][-1] > 1e-4 * body["sigma_raw"][0]


def test_denoise_zero_matrix_degenerate(client):
    resp = client.post("/denoise", json={"matrix": [[0.0, 0.0], [0.0, 0.0]]})
    assert resp.status_code == 200
    body = resp.json()
    assert body["degenerate"] is True
    assert body["deficient_by_one"] is False


def test_denoise_rejects_ragged_matrix(client):
    resp = client.post("/denoise", json={"matrix": [[1.0, 2.0], [3.0]]})
    assert resp.status_code == 400


def test_complete_endpoint(client):
    rng = np.random.default_rng(6)
    pixels = rng.uniform(0.3, 0.7, 16 * 16).tolist()
    resp = client.post("/complete", json={
        "image": {"width": 16, "height": 16, "pixels": pixels},
        "rank": 1, "fraction": 0.3, "seed": 8,
    })
    assert resp.status_code == 200
    body = resp.json()
    assert body["n_corrupted"] == 76  # floor(0.3 * 256)
    assert body["rel_error_recovered"] <= 1e-3
    assert body["rel_error_corrupted"] > body["rel_error_recovered"]


def test_complete_rejects_bad_rank(client):
    rng = np.random.default_rng(7)
    pixels = rng.uniform(0, 1, 16).tolist()
    resp = client.post("/complete", json={
        "image": {"width": 4, "height": 4, "pixels": pixels}, "rank": 9,
    })
    assert resp.status_code == 400
