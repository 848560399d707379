from enum import Enum

DEFAULT_WINDOW = 250
DEFAULT_ALPHAS = (0.05, 0.01)
TEST_LEVEL = 0.05
MIN_BOOTSTRAP = 200


class ChoiceEnum(Enum):
    """
    Enum whose values are the user-facing names (CLI flags, CSV columns,
    config entries).
    """

    def __str__(self):
        return self.value

    @classmethod
    def choices(cls):
        return [choice.value for choice in cls]

    @classmethod
    def parse(cls, text):
        """Looks a member up by value, falling back to a case-insensitive name match."""
        for choice in cls:
            if text == choice.value or str(text).lower() == choice.name.lower():
                return choice
        raise ValueError(f"{text!r} is not one of {cls.choices()}")
