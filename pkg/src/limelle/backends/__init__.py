from .base import ClassifierBackend, EmbeddingBackend, LlmBackend
from .cache import CachedClassifier, CachedEmbedder, CachedLlm, CacheKey, ResponseCache
from .http import HttpClassifier, HttpEmbedder, HttpLlm, ProviderAdapter, RequestLimiter
from .mocks import MockClassifier, MockEmbedder, MockLlm, OodMode

__all__ = [
    "ClassifierBackend", "EmbeddingBackend", "LlmBackend",
    "CachedClassifier", "CachedEmbedder", "CachedLlm", "CacheKey", "ResponseCache",
    "HttpClassifier", "HttpEmbedder", "HttpLlm", "ProviderAdapter", "RequestLimiter",
    "MockClassifier", "MockEmbedder", "MockLlm", "OodMode",
]
