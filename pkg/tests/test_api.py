"""
HTTP service tests: every endpoint driven in-process through the ASGI transport.
"""
import pytest
import pytest_asyncio
import httpx
from httpx import ASGITransport

from src.main import app


@pytest_asyncio.fixture
async def client():
    async with httpx.AsyncClient(
        transport=ASGITransport(app=app), base_url="http://test"
    ) as c:
        yield c


# ─── Health ───────────────────────────────────────────────────────────────────

@pytest.mark.asyncio
async def test_health(client):
    res = await client.get("/api/health")
    assert res.status_code == 200
    assert res.json()["status"] == "ok"


# ─── Exchange ─────────────────────────────────────────────────────────────────

@pytest.mark.asyncio
async def test_exchange_endpoint(client):
    res = await client.post("/api/exchange", json={"N": 2, "a": 0.5})
    assert res.status_code == 200, res.text
    data = res.json()
    assert data["residual_overlap"] == pytest.approx(0.75, abs=1e-12)
    assert data["method"] == "direct_nonorthogonal"


@pytest.mark.asyncio
async def test_exchange_intermediate(client):
    res = await client.post("/api/exchange", json={"N": 2, "method": "intermediate", "backend": "gram"})
    assert res.status_code == 200, res.text
    assert res.json()["residual_overlap"] == pytest.approx(0.25, abs=1e-12)


@pytest.mark.asyncio
async def test_exchange_identical_states(client):
    res = await client.post("/api/exchange", json={"N": 3, "a": 1.0})
    assert res.status_code == 200, res.text
    data = res.json()
    assert data["backend"] == "phase"
    assert data["residual_overlap"] == 1.0


@pytest.mark.asyncio
async def test_exchange_invalid(client):
    res = await client.post("/api/exchange", json={"N": 2, "a": 1.5})
    assert res.status_code == 400
    res = await client.post("/api/exchange", json={"N": 0})
    assert res.status_code == 422


# ─── Game endpoints ───────────────────────────────────────────────────────────

@pytest.mark.asyncio
async def test_game_play(client):
    res = await client.post("/api/game/play", json={"N": 2, "backend": "dense"})
    assert res.status_code == 200, res.text
    assert res.json()["win_probability"] == pytest.approx(0.75, abs=1e-10)


@pytest.mark.asyncio
async def test_game_bound(client):
    res = await client.get("/api/game/bound/1")
    assert res.status_code == 200
    data = res.json()
    assert data["upper_bound"] == pytest.approx(0.98756, abs=1e-5)
    assert data["unentangled_cap"] == pytest.approx(0.8535533905932737)


@pytest.mark.asyncio
async def test_game_bound_invalid(client):
    res = await client.get("/api/game/bound/0")
    assert res.status_code == 400


@pytest.mark.asyncio
async def test_game_optimize(client):
    res = await client.post(
        "/api/game/optimize",
        json={"d": 1, "restarts": 2, "max_iters": 20, "warm_start": "marking", "dump_state": True},
    )
    assert res.status_code == 200, res.text
    data = res.json()
    assert data["best_value"] >= 0.5 - 1e-12
    assert data["strategy"]["d"] == 1


@pytest.mark.asyncio
async def test_chain_check(client):
    res = await client.post("/api/game/chain-check", json={"d": 1, "draws": 3, "seed": 2})
    assert res.status_code == 200, res.text
    assert len(res.json()["entries"]) == 3


# ─── Completeness / Embezzlement ──────────────────────────────────────────────

@pytest.mark.asyncio
async def test_completeness(client):
    res = await client.post("/api/completeness", json={"c": 0.9, "s": 0.5, "N": 2, "sweep_points": 3})
    assert res.status_code == 200, res.text
    data = res.json()
    assert data["acceptance"] == pytest.approx(1 - 2 * 0.9 * 0.1 / 2, abs=1e-10)
    assert data["no_ceiling"] == pytest.approx(0.8)
    assert len(data["sweep"]) == 3


@pytest.mark.asyncio
async def test_completeness_invalid(client):
    res = await client.post("/api/completeness", json={"c": 0.5, "s": 0.7, "N": 1})
    assert res.status_code == 400


@pytest.mark.asyncio
async def test_embezzle(client):
    res = await client.post("/api/embezzle", json={"N": 8, "epsilon": 0.5, "target": "zero"})
    assert res.status_code == 200, res.text
    data = res.json()
    assert data["backend"] == "phase"
    assert data["fidelity"] == pytest.approx(1.0)


@pytest.mark.asyncio
async def test_embezzle_explicit_target(client):
    res = await client.post(
        "/api/embezzle",
        json={"N": 8, "epsilon": 0.5, "m": 1, "dims": 2, "target": [[0.6, 0.0], [0.0, 0.8]]},
    )
    assert res.status_code == 200, res.text
    assert res.json()["dims"] == [2]


@pytest.mark.asyncio
async def test_embezzle_state_json_target(client):
    target = {
        "layout": [["X1", 2], ["X2", 2]],
        "amplitudes": [[0.6, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.8]],
    }
    res = await client.post("/api/embezzle", json={"N": 8, "epsilon": 0.5, "target": target})
    assert res.status_code == 200, res.text
    data = res.json()
    assert data["dims"] == [2, 2]
    assert data["fidelity"] >= data["guarantee"] - 1e-9


@pytest.mark.asyncio
async def test_embezzle_state_json_wrong_layout(client):
    target = {"layout": [["Y", 2]], "amplitudes": [[1.0, 0.0], [0.0, 0.0]]}
    res = await client.post("/api/embezzle", json={"N": 8, "epsilon": 0.5, "target": target})
    assert res.status_code == 400
