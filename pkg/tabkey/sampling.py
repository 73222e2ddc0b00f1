import numpy as np

from tabkey.exceptions import VocabError
from tabkey.vocab import END_OF_CLAIM


def nucleus(probs, top_p, temperature):
    """Temperature-scale probabilities already sorted most likely first, then
    keep the shortest head whose mass reaches `top_p`."""
    probs = np.asarray(probs, dtype=np.float64)
    with np.errstate(divide='ignore'):
        logits = np.log(probs) / temperature
    logits -= logits.max()
    scaled = np.exp(logits)
    scaled /= scaled.sum()
    keep = int(np.searchsorted(np.cumsum(scaled), top_p)) + 1
    head = scaled[:min(keep, len(scaled))]
    return head / head.sum()


def sample_continuation(predictor, prompt, max_tokens=128, top_p=0.9,
                        temperature=0.75, seed=0, greedy=False):
    """Generate up to `max_tokens` tokens after `prompt`.

    Stops early at the end-of-claim tag, which is not part of the result.
    `greedy` always takes the most likely token (the zero-temperature limit).
    """
    prompt = list(prompt)
    if not prompt:
        raise ValueError("Sampling needs a non-empty prompt")
    if not 0.0 < top_p <= 1.0:
        raise ValueError("top_p must lie in (0, 1]")
    if temperature <= 0.0:
        raise ValueError("temperature must be positive; use greedy for argmax decoding")
    try:
        stop = predictor.vocab.token_id(END_OF_CLAIM)
    except VocabError:
        stop = None

    rng = np.random.default_rng(seed)
    context = prompt
    generated = []
    for _ in range(max_tokens):
        ids, probs = predictor.candidates(context)
        if greedy:
            token = int(ids[0])
        else:
            weights = nucleus(probs, top_p, temperature)
            token = int(ids[rng.choice(len(weights), p=weights)])
        if token == stop:
            break
        generated.append(token)
        context.append(token)
    return generated
