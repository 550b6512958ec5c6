class LabError(Exception):
    """
    Ошибка лаборатории с машиночитаемым кодом.

    Код ("arity", "degenerate", "resonance", ...) идет в отчеты и тесты,
    сообщение предназначено человеку.
    """

    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(f"[{code}] {self.message}")
