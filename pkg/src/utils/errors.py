from __future__ import annotations


class CornerGrowthError(Exception):
    def __init__(self, module: str, message: str) -> None:
        super().__init__(f"[{module}] {message}")
        self.module = module
        self.message = message

    def __reduce__(self):
        # errors raised in replica workers are pickled back to the parent
        return type(self), (self.module, self.message)


class ContractError(CornerGrowthError):
    pass


class CapacityError(CornerGrowthError):
    pass


class HypothesisError(CornerGrowthError):
    def __init__(self, module: str, hypothesis: str, detail: str = "") -> None:
        text = f"hypothesis violated: {hypothesis}"
        if detail:
            text = f"{text} ({detail})"
        super().__init__(module, text)
        self.hypothesis = hypothesis
        self.detail = detail

    def __reduce__(self):
        return type(self), (self.module, self.hypothesis, self.detail)


class DegenerateParameterError(HypothesisError):
    pass


class InsufficientDataError(CornerGrowthError):
    pass


class VerificationFailure(CornerGrowthError):
    pass
