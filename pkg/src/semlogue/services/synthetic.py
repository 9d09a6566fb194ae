"""Templated task-oriented paraphrase corpus for desk-scale runs."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..models.dialogue import Dialogue, Turn
from ..utils.exceptions import ValidationError

MIN_PARAPHRASES = 3


@dataclass(frozen=True)
class Exchange:
    """A user request template and the interchangeable system answers to it."""

    user: Tuple[str, ...]
    system: Tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.user:
            raise ValidationError("an exchange needs at least one user template")
        if len(self.system) < MIN_PARAPHRASES:
            raise ValidationError(f"an exchange needs at least {MIN_PARAPHRASES} system paraphrases")


SLOTS: Dict[str, Tuple[str, ...]] = {
    "area": ("north", "south", "east", "west", "centre"),
    "food": ("italian", "chinese", "indian", "french", "thai"),
    "price": ("cheap", "moderate", "expensive"),
    "day": ("monday", "tuesday", "friday", "saturday"),
    "time": ("10:00", "12:30", "17:15", "19:45"),
    "people": ("2", "3", "4", "6"),
    "place": ("cambridge", "london", "ely", "norwich"),
    "name": ("golden house", "river bar", "city stop", "the lodge"),
}

DOMAINS: Dict[str, Tuple[Exchange, ...]] = {
    "restaurant": (
        Exchange(
            user=(
                "i want a {price} {food} restaurant in the {area}",
                "can you find me a {food} place in the {area} that is {price}",
            ),
            system=(
                "{name} serves {food} food in the {area} and is {price}.",
                "i found {name}, a {price} {food} restaurant in the {area}.",
                "how about {name}? it is a {food} place in the {area} with {price} prices.",
            ),
        ),
        Exchange(
            user=("please book it for {people} people on {day} at {time}", "book a table for {people} on {day} at {time}"),
            system=(
                "your table for {people} on {day} at {time} is booked.",
                "done, i reserved a table for {people} people on {day} at {time}.",
                "the booking for {people} on {day} at {time} is confirmed.",
            ),
        ),
    ),
    "hotel": (
        Exchange(
            user=("i need a {price} hotel in the {area}", "is there a {price} place to stay in the {area}"),
            system=(
                "{name} is a {price} hotel in the {area}.",
                "you could stay at {name}, it is {price} and in the {area}.",
                "i recommend {name}, a {price} hotel located in the {area}.",
            ),
        ),
        Exchange(
            user=("book it for {people} people from {day}", "reserve rooms for {people} starting {day}"),
            system=(
                "your rooms for {people} from {day} are booked.",
                "i booked the hotel for {people} people starting {day}.",
                "the reservation for {people} from {day} is confirmed.",
            ),
        ),
    ),
    "train": (
        Exchange(
            user=("i need a train to {place} on {day}", "are there trains going to {place} on {day}"),
            system=(
                "there is a train to {place} on {day} leaving at {time}.",
                "a train departs for {place} at {time} on {day}.",
                "you can take the {time} train to {place} on {day}.",
            ),
        ),
        Exchange(
            user=("book {people} tickets please", "can i get {people} seats on it"),
            system=(
                "i booked {people} tickets for you.",
                "{people} seats are reserved on that train.",
                "done, {people} tickets are booked.",
            ),
        ),
    ),
    "taxi": (
        Exchange(
            user=("i need a taxi to {place} at {time}", "get me a cab to {place} for {time}"),
            system=(
                "a taxi will pick you up at {time} to go to {place}.",
                "your cab to {place} is booked for {time}.",
                "i arranged a taxi to {place} at {time}.",
            ),
        ),
    ),
}

CLOSING = Exchange(
    user=("thank you, that is all", "thanks, goodbye"),
    system=(
        "you are welcome, goodbye.",
        "glad i could help, have a nice day.",
        "thank you for calling, goodbye.",
    ),
)


class SyntheticCorpusGenerator:
    """
    Seeded generator of short task-oriented dialogues.

    Every system turn is one of at least three paraphrases of the same
    answer, so a response can be right in meaning while differing in words.
    """

    def __init__(self, seed: int = 0) -> None:
        self.logger = logging.getLogger(__name__)
        self.seed = seed

    def _fill(self, template: str, slots: Dict[str, str]) -> str:
        return template.format(**slots)

    def _slots(self, rng: np.random.Generator) -> Dict[str, str]:
        return {name: values[int(rng.integers(len(values)))] for name, values in SLOTS.items()}

    def dialogue(self, index: int, rng: np.random.Generator) -> Dialogue:
        domain = sorted(DOMAINS)[int(rng.integers(len(DOMAINS)))]
        slots = self._slots(rng)
        turns: List[Turn] = []
        exchanges: Sequence[Exchange] = DOMAINS[domain] + (CLOSING,)
        for exchange in exchanges:
            user = exchange.user[int(rng.integers(len(exchange.user)))]
            system = exchange.system[int(rng.integers(len(exchange.system)))]
            turns.append(Turn("user", self._fill(user, slots)))
            turns.append(Turn("system", self._fill(system, slots)))
        return Dialogue(dialogue_id=f"synth-{self.seed}-{index:05d}", turns=turns, domains=[domain])

    def generate(self, count: int) -> List[Dialogue]:
        """``count`` dialogues; identical for identical (seed, count)."""
        if count < 1:
            raise ValidationError("synthetic corpus size must be positive")
        rng = np.random.default_rng(self.seed)
        dialogues = [self.dialogue(i, rng) for i in range(count)]
        self.logger.info(f"Generated {count} synthetic dialogues (seed {self.seed})")
        return dialogues


def paraphrase_sets() -> List[Tuple[str, ...]]:
    """Every group of interchangeable system templates."""
    groups = [exchange.system for exchanges in DOMAINS.values() for exchange in exchanges]
    return groups + [CLOSING.system]
