import logging
import threading

import numpy as np
import requests
from requests.adapters import HTTPAdapter, Retry

from tabkey.exceptions import PredictorError, RemoteProtocolError

from . import BasePredictor, PredictionResult, TopkEntry

logger = logging.getLogger(__name__)


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _is_prob(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool) and 0.0 <= value <= 1.0


def parse_reply(body, target, k, vocab, position=None):
    """Validate a `/v1/rank` reply and turn it into a PredictionResult.

    Nothing is repaired: any field that breaks the protocol or contradicts
    another field is an error.
    """
    if not isinstance(body, dict):
        raise RemoteProtocolError("Reply is not a JSON object", position)
    rank = body.get('target_rank')
    prob = body.get('target_prob')
    topk = body.get('topk')
    if not _is_int(rank) or not 1 <= rank <= len(vocab):
        raise RemoteProtocolError(f"target_rank {rank!r} is not in 1..{len(vocab)}", position)
    if not _is_prob(prob):
        raise RemoteProtocolError(f"target_prob {prob!r} is not a probability", position)
    if not isinstance(topk, list):
        raise RemoteProtocolError("topk is not a list", position)
    expected = min(k, len(vocab))
    if len(topk) != expected:
        raise RemoteProtocolError(f"topk has {len(topk)} entries, expected {expected}", position)

    entries = []
    for slot, item in enumerate(topk, start=1):
        if not isinstance(item, dict):
            raise RemoteProtocolError(f"topk[{slot - 1}] is not an object", position)
        token, text, p = item.get('id'), item.get('text'), item.get('prob')
        if not _is_int(token) or not 0 <= token < len(vocab):
            raise RemoteProtocolError(f"topk[{slot - 1}].id {token!r} is not a token id", position)
        if not isinstance(text, str) or not _is_prob(p):
            raise RemoteProtocolError(f"topk[{slot - 1}] has a bad text or prob", position)
        entries.append(TopkEntry(token, text, float(p)))

    return PredictionResult(target, rank, float(prob), tuple(entries)).validate(
        RemoteProtocolError, position)


class RemotePredictor(BasePredictor):
    """Ranks through an HTTP server speaking the `/v1/rank` protocol.

    One POST per position: {"context": [...], "target": id, "k": k}.
    The server only reveals the top-k, so sampling is restricted to it.
    """

    def __init__(self, vocab, endpoint, timeout=30, retries=3, sample_k=50):
        super().__init__(vocab)
        if not endpoint:
            raise PredictorError("No predictor endpoint configured")
        self.endpoint = endpoint.rstrip('/')
        self.url = f"{self.endpoint}/v1/rank"
        self.timeout = timeout
        self.retries = retries
        self.sample_k = sample_k
        self._local = threading.local()
        self._lock = threading.Lock()
        self._sessions = []

    @property
    def http(self):
        # requests sessions are not shared between worker threads
        session = getattr(self._local, 'session', None)
        if session is None:
            session = requests.Session()
            retry_strategy = Retry(
                total=self.retries,
                backoff_factor=0.5,
                status_forcelist=[429, 500, 502, 503, 504],
                allowed_methods=['POST'],
            )
            adapter = HTTPAdapter(max_retries=retry_strategy)
            session.mount('https://', adapter)
            session.mount('http://', adapter)
            self._local.session = session
            with self._lock:
                self._sessions.append(session)
        return session

    def _post(self, payload, position):
        try:
            resp = self.http.post(self.url, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise PredictorError(f"Predictor at {self.url} failed: {exc}", position) from exc
        if resp.status_code != 200:
            raise RemoteProtocolError(
                f"Predictor at {self.url} answered HTTP {resp.status_code}", position)
        try:
            return resp.json()
        except ValueError as exc:
            raise RemoteProtocolError(f"Predictor reply is not JSON: {exc}", position) from exc

    def _rank(self, context, target, k):
        position = len(context)
        payload = {'context': [int(t) for t in context], 'target': int(target), 'k': int(k)}
        logger.debug(f"POST {self.url} position={position} k={k}")
        return parse_reply(self._post(payload, position), target, k, self.vocab, position)

    def distribution(self, context):
        raise PredictorError("Remote predictors only expose their top-k")

    def candidates(self, context):
        # the target is irrelevant when only the head of the ordering is wanted
        result = self._rank(tuple(context), 0, self.sample_k)
        ids = np.array([entry.id for entry in result.topk], dtype=np.int64)
        probs = np.array([entry.prob for entry in result.topk], dtype=np.float64)
        return ids, probs

    def close(self):
        """Close the HTTP sessions of every thread that used this predictor."""
        with self._lock:
            sessions, self._sessions = self._sessions, []
            self._local = threading.local()
        for session in sessions:
            session.close()
