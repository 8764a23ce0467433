//! Kitchen layouts: ASCII parsing, rendering and reachability checks.
//!
//! A layout file is a block of newline-separated rows using this char map:
//!
//! | char      | tile                                   |
//! |-----------|----------------------------------------|
//! | `X`       | counter                                |
//! | `P`       | pot                                    |
//! | `O`       | onion dispenser                        |
//! | `D`       | dish dispenser                         |
//! | `S`       | serving station                        |
//! | ` `       | floor                                  |
//! | `1`..`9`  | floor cell where seat `digit - 1` starts |
//!
//! Every border cell must be non-floor, so a position one step away from any
//! floor cell is always inside the grid.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tile {
    Floor,
    Counter,
    Pot,
    OnionDispenser,
    DishDispenser,
    ServingStation,
}

impl Tile {
    /// Stations every layout must contain at least once.
    pub const STATIONS: [Tile; 4] = [
        Tile::Pot,
        Tile::OnionDispenser,
        Tile::DishDispenser,
        Tile::ServingStation,
    ];

    pub fn is_floor(self) -> bool {
        self == Tile::Floor
    }

    pub fn glyph(self) -> char {
        match self {
            Tile::Floor => ' ',
            Tile::Counter => 'X',
            Tile::Pot => 'P',
            Tile::OnionDispenser => 'O',
            Tile::DishDispenser => 'D',
            Tile::ServingStation => 'S',
        }
    }

    pub fn from_glyph(c: char) -> Option<Tile> {
        Some(match c {
            ' ' => Tile::Floor,
            'X' => Tile::Counter,
            'P' => Tile::Pot,
            'O' => Tile::OnionDispenser,
            'D' => Tile::DishDispenser,
            'S' => Tile::ServingStation,
            _ => return None,
        })
    }
}

/// Grid cell. Ordered by `(y, x)` so ordered maps iterate row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub const fn new(x: usize, y: usize) -> Self {
        Pos { x, y }
    }

    /// Cell one step away. Callers only offset from floor cells, which never
    /// sit on the border.
    pub fn offset(self, dx: i32, dy: i32) -> Pos {
        Pos {
            x: (self.x as i64 + dx as i64) as usize,
            y: (self.y as i64 + dy as i64) as usize,
        }
    }

    pub fn manhattan(self, other: Pos) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl Ord for Pos {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Pos {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Offsets of the four neighbours in ascending `(y, x)` order: N, W, E, S.
pub(crate) const NEIGHBOURS: [(i32, i32); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("row {row} has {found} cells, expected {expected}")]
    NotRectangular {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown character {ch:?} at row {row}, column {col}")]
    UnknownChar { ch: char, row: usize, col: usize },
    #[error("seat digit {digit} appears more than once")]
    DuplicateSeatDigit { digit: u8 },
    #[error("seat digits must be contiguous from 1; digit {missing} is missing")]
    NonContiguousSeatDigits { missing: u8 },
    #[error("layout needs at least 2 seats, found {found}")]
    TooFewSeats { found: usize },
    #[error("layout has no {0:?}")]
    MissingStation(Tile),
    #[error("border cell {0} is floor")]
    OpenBorder(Pos),
    #[error("cannot read layout file: {0}")]
    Io(String),
}

/// Station cell lists, derived from the grid at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct StationIndex {
    pub pots: Vec<Pos>,
    pub onion_dispensers: Vec<Pos>,
    pub dish_dispensers: Vec<Pos>,
    pub serving_stations: Vec<Pos>,
}

impl StationIndex {
    fn build(width: usize, grid: &[Tile]) -> Self {
        let mut idx = StationIndex {
            pots: Vec::new(),
            onion_dispensers: Vec::new(),
            dish_dispensers: Vec::new(),
            serving_stations: Vec::new(),
        };
        for (i, tile) in grid.iter().enumerate() {
            let p = Pos::new(i % width, i / width);
            match tile {
                Tile::Pot => idx.pots.push(p),
                Tile::OnionDispenser => idx.onion_dispensers.push(p),
                Tile::DishDispenser => idx.dish_dispensers.push(p),
                Tile::ServingStation => idx.serving_stations.push(p),
                Tile::Floor | Tile::Counter => {}
            }
        }
        idx
    }

    pub fn of(&self, tile: Tile) -> &[Pos] {
        match tile {
            Tile::Pot => &self.pots,
            Tile::OnionDispenser => &self.onion_dispensers,
            Tile::DishDispenser => &self.dish_dispensers,
            Tile::ServingStation => &self.serving_stations,
            Tile::Floor | Tile::Counter => &[],
        }
    }
}

/// Immutable kitchen map for `num_agents` seats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub grid: Vec<Tile>,
    pub start_positions: Vec<Pos>,
    pub num_agents: usize,
    pub(crate) stations: StationIndex,
}

impl Layout {
    /// Parses layout text. The name is left empty; see [`Layout::with_name`].
    pub fn parse(text: &str) -> Result<Layout, LayoutError> {
        let rows: Vec<&str> = text
            .split('\n')
            .map(|r| r.strip_suffix('\r').unwrap_or(r))
            .collect();
        // A trailing newline terminates the last row rather than opening a new one.
        let rows = match rows.split_last() {
            Some((last, init)) if last.is_empty() => init,
            _ => &rows[..],
        };

        let mut grid = Vec::new();
        let mut seats: [Option<Pos>; 9] = [None; 9];
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                let tile = match ch {
                    '1'..='9' => {
                        let digit = ch as u8 - b'0';
                        let slot = &mut seats[digit as usize - 1];
                        if slot.is_some() {
                            return Err(LayoutError::DuplicateSeatDigit { digit });
                        }
                        *slot = Some(Pos::new(x, y));
                        Tile::Floor
                    }
                    _ => Tile::from_glyph(ch).ok_or(LayoutError::UnknownChar {
                        ch,
                        row: y,
                        col: x,
                    })?,
                };
                grid.push(tile);
            }
        }

        let width = rows.first().map_or(0, |r| r.chars().count());
        for (y, row) in rows.iter().enumerate() {
            let found = row.chars().count();
            if found != width {
                return Err(LayoutError::NotRectangular {
                    row: y,
                    expected: width,
                    found,
                });
            }
        }
        let height = rows.len();

        let count = seats.iter().filter(|s| s.is_some()).count();
        if let Some(missing) = seats[..count].iter().position(Option::is_none) {
            return Err(LayoutError::NonContiguousSeatDigits {
                missing: missing as u8 + 1,
            });
        }
        if count < 2 {
            return Err(LayoutError::TooFewSeats { found: count });
        }
        let start_positions: Vec<Pos> = seats[..count].iter().map(|s| s.unwrap()).collect();

        for station in Tile::STATIONS {
            if !grid.contains(&station) {
                return Err(LayoutError::MissingStation(station));
            }
        }
        for (i, tile) in grid.iter().enumerate() {
            let (x, y) = (i % width, i / width);
            let border = x == 0 || y == 0 || x + 1 == width || y + 1 == height;
            if border && tile.is_floor() {
                return Err(LayoutError::OpenBorder(Pos::new(x, y)));
            }
        }

        let stations = StationIndex::build(width, &grid);
        Ok(Layout {
            name: String::new(),
            width,
            height,
            grid,
            num_agents: start_positions.len(),
            start_positions,
            stations,
        })
    }

    /// Reads a `.layout` file; the layout is named after the file stem.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Layout, LayoutError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LayoutError::Io(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(Layout::parse(&text)?.with_name(name))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Layout {
        self.name = name.into();
        self
    }

    /// Canonical text: one line per row, each terminated by `\n`.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                let p = Pos::new(x, y);
                match self.start_positions.iter().position(|&s| s == p) {
                    Some(seat) => out.push(char::from(b'1' + seat as u8)),
                    None => out.push(self.tile(p).glyph()),
                }
            }
            out.push('\n');
        }
        out
    }

    #[inline]
    pub fn tile(&self, p: Pos) -> Tile {
        self.grid[p.y * self.width + p.x]
    }

    #[inline]
    pub fn index(&self, p: Pos) -> usize {
        p.y * self.width + p.x
    }

    /// Positions of every cell holding `tile`, in `(y, x)` order.
    pub fn cells_of(&self, tile: Tile) -> Vec<Pos> {
        match tile {
            Tile::Floor | Tile::Counter => (0..self.grid.len())
                .filter(|&i| self.grid[i] == tile)
                .map(|i| Pos::new(i % self.width, i / self.width))
                .collect(),
            _ => self.stations.of(tile).to_vec(),
        }
    }

    /// In-grid 4-neighbours of `p`, ascending `(y, x)`.
    pub fn neighbours(&self, p: Pos) -> impl Iterator<Item = Pos> + '_ {
        NEIGHBOURS.iter().filter_map(move |&(dx, dy)| {
            let x = p.x as i64 + dx as i64;
            let y = p.y as i64 + dy as i64;
            (x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height)
                .then(|| Pos::new(x as usize, y as usize))
        })
    }
}

/// A reachability problem found by [`check_reachability`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Finding {
    pub station: Tile,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}Unreachable", self.station)
    }
}

/// Floor cells reachable from any start position, indexed like the grid.
pub fn reachable_floor(layout: &Layout) -> Vec<bool> {
    let mut seen = vec![false; layout.grid.len()];
    let mut queue: VecDeque<Pos> = VecDeque::new();
    for &s in &layout.start_positions {
        let i = layout.index(s);
        if !seen[i] {
            seen[i] = true;
            queue.push_back(s);
        }
    }
    while let Some(p) = queue.pop_front() {
        for n in layout.neighbours(p) {
            let i = layout.index(n);
            if !seen[i] && layout.grid[i].is_floor() {
                seen[i] = true;
                queue.push_back(n);
            }
        }
    }
    seen
}

/// Reports every station type with no instance next to a floor cell that at
/// least one seat can walk to. An empty list means the layout is playable.
pub fn check_reachability(layout: &Layout) -> Vec<Finding> {
    let reachable = reachable_floor(layout);
    Tile::STATIONS
        .into_iter()
        .filter(|&station| {
            !layout.stations.of(station).iter().any(|&cell| {
                layout
                    .neighbours(cell)
                    .any(|n| reachable[layout.index(n)])
            })
        })
        .map(|station| Finding { station })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "XXPXX\nO1  X\nX  2D\nXXSXX\nXXXXX\n";

    #[test]
    fn parses_two_seat_kitchen() {
        let l = Layout::parse(SMALL).unwrap();
        assert_eq!((l.width, l.height, l.num_agents), (5, 5, 2));
        assert_eq!(l.start_positions, vec![Pos::new(1, 1), Pos::new(3, 2)]);
        assert_eq!(l.tile(Pos::new(2, 0)), Tile::Pot);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = Layout::parse("XXPXX\nO1 2\nXDSXX\n").unwrap_err();
        assert!(matches!(err, LayoutError::NotRectangular { row: 1, .. }));
    }

    #[test]
    fn rejects_gap_in_seat_digits() {
        let err = Layout::parse("XXPXX\nO1 3X\nXDSXX\n").unwrap_err();
        assert_eq!(err, LayoutError::NonContiguousSeatDigits { missing: 2 });
    }

    #[test]
    fn rejects_duplicate_digits_and_unknown_chars() {
        assert_eq!(
            Layout::parse("XXPXX\nO1 1X\nXDSXX\n").unwrap_err(),
            LayoutError::DuplicateSeatDigit { digit: 1 }
        );
        assert!(matches!(
            Layout::parse("XXPXX\nO1 2T\nXDSXX\n").unwrap_err(),
            LayoutError::UnknownChar { ch: 'T', .. }
        ));
    }

    #[test]
    fn rejects_missing_station_and_open_border() {
        assert_eq!(
            Layout::parse("XXXXX\nO1 2X\nXDSXX\n").unwrap_err(),
            LayoutError::MissingStation(Tile::Pot)
        );
        assert_eq!(
            Layout::parse("XXPXX\nO1 2 \nXDSXX\n").unwrap_err(),
            LayoutError::OpenBorder(Pos::new(4, 1))
        );
    }

    #[test]
    fn single_seat_is_too_few() {
        assert_eq!(
            Layout::parse("XXPXX\nO1  X\nXDSXX\n").unwrap_err(),
            LayoutError::TooFewSeats { found: 1 }
        );
        assert_eq!(
            Layout::parse("").unwrap_err(),
            LayoutError::TooFewSeats { found: 0 }
        );
    }

    #[test]
    fn render_is_canonical() {
        let l = Layout::parse(SMALL).unwrap();
        assert_eq!(l.render(), SMALL);
        let rendered = l.render();
        let first = rendered.lines().next().unwrap();
        assert_eq!(first.find('P'), Some(2));
        assert_eq!(rendered.matches('P').count(), 1);
    }

    #[test]
    fn accepts_missing_trailing_newline_and_crlf() {
        let a = Layout::parse(SMALL.trim_end()).unwrap();
        let b = Layout::parse(&SMALL.replace('\n', "\r\n")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn open_room_has_no_findings() {
        let l = Layout::parse(
            "XXXPXXX\nX     X\nO 1   S\nX     X\nX   2 X\nX     X\nXXDXXXX\n",
        )
        .unwrap();
        assert!(check_reachability(&l).is_empty());
    }

    #[test]
    fn enclosed_pot_is_reported() {
        let l = Layout::parse("XXXXXXX\nXXPXXXX\nXXXX  X\nO 1  2S\nXXDXXXX\n").unwrap();
        let findings = check_reachability(&l);
        assert_eq!(findings, vec![Finding { station: Tile::Pot }]);
        assert_eq!(findings[0].to_string(), "PotUnreachable");
    }

    #[test]
    fn station_reachable_by_one_seat_suffices() {
        // Seat 1's chamber holds the serving station; seat 2's chamber does not.
        let l = Layout::parse("XXXXXXXXX\nS 1 X 2 P\nXOXXXXDXX\n").unwrap();
        assert!(check_reachability(&l).is_empty());
    }
}
