from retainkv.exceptions import ContractViolation


def compression_ratio(prompt_len: int, b: int) -> float:
    """Processed length over the per-head budget.

    >>> compression_ratio(1024, 128)
    8.0
    """
    if b < 1:
        raise ContractViolation(f"budget must be at least 1, got {b}")
    return prompt_len / b
