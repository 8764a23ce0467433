//! Layouts shipped with the crate.

use crate::layout::Layout;

pub const OPEN_ROOM: &str = include_str!("../layouts/open_room.layout");
pub const CORRIDOR: &str = include_str!("../layouts/corridor.layout");
pub const THREE_ROOM: &str = include_str!("../layouts/three_room.layout");
pub const WIDE_OPEN5: &str = include_str!("../layouts/wide_open5.layout");
/// Two rooms joined only by the pot: one side has onions, the other dishes
/// and the serving station.
pub const SPLIT_KITCHEN: &str = include_str!("../layouts/split_kitchen.layout");

/// `(name, text)` for every shipped layout.
pub const ALL: &[(&str, &str)] = &[
    ("open_room", OPEN_ROOM),
    ("corridor", CORRIDOR),
    ("three_room", THREE_ROOM),
    ("wide_open5", WIDE_OPEN5),
    ("split_kitchen", SPLIT_KITCHEN),
];

pub fn builtin(name: &str) -> Option<Layout> {
    ALL.iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| Layout::parse(text).expect("shipped layout parses").with_name(*n))
}
