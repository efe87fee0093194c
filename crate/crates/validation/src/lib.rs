//! Acceptance criteria and figure-shape checks live in `tests/acceptance`.
