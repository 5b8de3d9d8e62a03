from fastapi import APIRouter, Body, HTTPException
from pathlib import Path
from typing import Any, Dict
from app.cli.run import compare, parse_run_config, run
from app.config import get_settings
from app.errors import ConfigError
from app.offcenter import STRATEGIES
from app.scenes import load_scene_config
import asyncio
from datetime import datetime
import logging

logger = logging.getLogger(__name__)
router = APIRouter()

VERSION = "1.0.0"

# Weighting strategies and their defaults
STRATEGY_INFO = {
    "vanilla": {
        "name": "Vanilla WoS",
        "description": "No reuse; every point keeps only its own stage-1 walks",
        "defaults": {},
    },
    "uniform": {
        "name": "Uniform reuse",
        "description": "Equal weights over every neighbor with a usable sample",
        "defaults": {"alpha": 0.5, "beta": 10.0},
    },
    "poisson-bound": {
        "name": "Poisson-bound reuse",
        "description": "Weights (1 - t)^(2d) / (1 - t^2)^2 of the relative offset t",
        "defaults": {"alpha": 0.5, "beta": 10.0},
    },
    "statistical": {
        "name": "Statistical reuse",
        "description": "Accept a neighbor when 1 - w* exceeds gamma, once both sides hold min_samples samples",
        "defaults": {"alpha": 0.5, "beta": 10.0, "gamma": 0.05, "min_samples": 8},
    },
}


def _resolve_scene(scene: str) -> str:
    path = Path(scene)
    if path.is_absolute() or path.exists():
        return str(path)
    return str(Path(get_settings().scenes_dir) / path)


@router.get("/strategies")
async def get_strategies():
    """Get the available weighting strategies"""
    return {
        "strategies": {key: STRATEGY_INFO[key] for key in STRATEGIES},
        "total": len(STRATEGIES)
    }

@router.get("/scenes")
async def get_scenes():
    """List scene configs found in the scenes directory"""
    scenes_dir = Path(get_settings().scenes_dir)
    scenes = []
    for path in sorted(scenes_dir.glob("*.json")):
        try:
            config = load_scene_config(path)
        except ConfigError as e:
            logger.warning(f"Skipping scene {path.name}: {e}")
            continue
        scenes.append({
            "file": path.name,
            "name": config.name,
            "dim": config.dim,
            "geometry": config.geometry.kind,
            "boundary": config.partition.rule,
            "problem": config.problem.type,
            "solution": config.problem.solution,
        })
    return {
        "scenes": scenes,
        "total": len(scenes)
    }

@router.post("/run")
async def run_solver(payload: Dict[str, Any] = Body(...)):
    """Run a solve (or a strategy comparison) and return the per-round report"""
    try:
        data = dict(payload)
        if "scene" in data:
            data["scene"] = _resolve_scene(str(data["scene"]))
        config = parse_run_config(data)
        logger.info(f"Running {config.compare or config.strategy} on {config.scene}")

        loop = asyncio.get_running_loop()
        if config.compare:
            reports = await loop.run_in_executor(None, compare, config)
        else:
            reports = [await loop.run_in_executor(None, run, config)]

        return {
            "scene": config.scene,
            "reports": [report.summary() for report in reports],
            "timestamp": datetime.now().isoformat(),
            "status": "success"
        }
    except ConfigError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error running solver: {e}")
        raise HTTPException(status_code=500, detail=f"Error running solver: {str(e)}")

@router.get("/health")
async def health_check():
    """Health check endpoint"""
    return {
        "status": "healthy",
        "version": VERSION,
        "timestamp": datetime.now().isoformat(),
        "strategies_available": len(STRATEGIES)
    }
