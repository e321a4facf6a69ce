# SPDX-FileCopyrightText: 2024 ganalyzer contributors
#
# SPDX-License-Identifier: BSD-3-Clause

"""The taxonomy module defines the fixed attribute taxonomy of four groups and ten classes.

Group and class order is significant: it fixes the column order of probability vectors, the row order of
co-occurrence matrices and the tie-break rule of hard labels (lowest index wins).

Classes:
    AttributeTaxonomy: An ordered mapping from attribute groups to their classes.

Attributes:
    TAXONOMY: The taxonomy used throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from ganalyzer.exceptions import UnknownClass, ValidationError


@dataclass(frozen=True)
class AttributeTaxonomy:
    """An ordered mapping from attribute groups to their classes.

    Attributes:
        groups: Pairs of (group name, class names) in canonical order.
    """

    groups: tuple[tuple[str, tuple[str, ...]], ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        names = [name for _, classes in self.groups for name in classes]
        if len(set(names)) != len(names):
            raise ValidationError("Class names must be unique across groups: %s" % names)
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(names)})

    @cached_property
    def group_names(self) -> tuple[str, ...]:
        """Return the group names in canonical order."""
        return tuple(group for group, _ in self.groups)

    @cached_property
    def class_names(self) -> tuple[str, ...]:
        """Return all class names in canonical order."""
        return tuple(name for _, classes in self.groups for name in classes)

    @cached_property
    def slices(self) -> dict[str, slice]:
        """Return the slice each group occupies in a concatenated 10-entry vector."""
        out = {}
        start = 0
        for group, classes in self.groups:
            out[group] = slice(start, start + len(classes))
            start += len(classes)
        return out

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, class_id: object) -> bool:
        return class_id in self._index

    def classes(self, group: str) -> tuple[str, ...]:
        """Return the classes of a group.

        Raises:
            ValidationError: If the group does not exist.
        """
        for name, classes in self.groups:
            if name == group:
                return classes
        raise ValidationError("Unknown attribute group: %r. Must be one of %s." % (group, list(self.group_names)))

    def index(self, class_id: str) -> int:
        """Return the position of a class in the concatenated 10-entry vector.

        Raises:
            UnknownClass: If the class is not part of the taxonomy.
        """
        try:
            return self._index[class_id]
        except KeyError:
            raise UnknownClass("Unknown class: %r" % class_id) from None

    def group_of(self, class_id: str) -> str:
        """Return the group a class belongs to.

        Raises:
            UnknownClass: If the class is not part of the taxonomy.
        """
        position = self.index(class_id)
        for group, part in self.slices.items():
            if part.start <= position < part.stop:
                return group
        raise UnknownClass("Unknown class: %r" % class_id)  # pragma: no cover

    def local_index(self, class_id: str) -> int:
        """Return the position of a class within its own group."""
        return self.index(class_id) - self.slices[self.group_of(class_id)].start


TAXONOMY = AttributeTaxonomy(
    groups=(
        ("gender", ("woman", "man")),
        ("age", ("young", "old")),
        ("emotion", ("happy", "neutral", "angry")),
        ("race", ("black", "white", "others")),
    )
)
