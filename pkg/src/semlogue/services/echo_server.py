"""Deterministic hashed-embedding HTTP service for integration runs."""

import logging
from typing import List

import uvicorn
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from ..config.settings import APP_VERSION, EmbeddingDefaults
from .embedding_service import HashedEmbedder

logger = logging.getLogger(__name__)


class EmbedRequest(BaseModel):
    texts: List[str]


class EmbedResponse(BaseModel):
    embeddings: List[List[float]]


def create_app(dim: int = EmbeddingDefaults.ECHO_DIM, strip: bool = EmbeddingDefaults.STRIP_TAGS) -> FastAPI:
    """App exposing ``POST /embed`` backed by a hashed embedder of size ``dim``."""
    embedder = HashedEmbedder(dim=dim, strip=strip)
    app = FastAPI(title="semlogue echo embedder", version=APP_VERSION)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "dim": dim}

    @app.post("/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest) -> EmbedResponse:
        if not request.texts:
            raise HTTPException(status_code=422, detail="texts must not be empty")
        vectors = embedder.embed(request.texts)
        logger.debug(f"Embedded {len(request.texts)} texts")
        return EmbedResponse(embeddings=vectors.tolist())

    return app


def serve(
    host: str = EmbeddingDefaults.ECHO_HOST,
    port: int = EmbeddingDefaults.ECHO_PORT,
    dim: int = EmbeddingDefaults.ECHO_DIM,
) -> None:
    """Run the echo embedder until interrupted."""
    uvicorn.run(create_app(dim=dim), host=host, port=port, log_level="warning")
