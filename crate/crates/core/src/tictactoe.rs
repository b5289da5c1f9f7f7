//! Tic-tac-toe positions labeled with a preferred move and the reason for it.
//!
//! Cells are indexed row-major 0..8. Moves are labeled by four rules applied
//! in order: Win, Block, Threat, then Empty (center, corners, middles).

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ExplanationId, LabelId, LabeledInstance, Task};
use crate::error::{Result, TedError};

pub const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

pub const N_FEATURES: usize = 19;

const FULL: u16 = 0x1ff;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    X,
    O,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::X => Player::O,
            Player::O => Player::X,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SquareKind {
    Center,
    Corner,
    Middle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Square(u8);

impl Square {
    pub fn new(index: usize) -> Option<Square> {
        (index < 9).then_some(Square(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn kind(self) -> SquareKind {
        match self.0 {
            4 => SquareKind::Center,
            0 | 2 | 6 | 8 => SquareKind::Corner,
            _ => SquareKind::Middle,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reason {
    Win,
    Block,
    Threat,
    Empty,
}

impl Reason {
    pub const ALL: [Reason; 4] = [Reason::Win, Reason::Block, Reason::Threat, Reason::Empty];

    pub fn name(self) -> &'static str {
        match self {
            Reason::Win => "Win",
            Reason::Block => "Block",
            Reason::Threat => "Threat",
            Reason::Empty => "Empty",
        }
    }

    pub fn id(self) -> ExplanationId {
        ExplanationId(self as u32)
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MoveLabel {
    pub square: Square,
    pub reason: Reason,
}

/// Board state: one bit per cell for each side, plus the side to move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Board {
    x: u16,
    o: u16,
    to_move: Player,
}

impl Board {
    pub fn empty() -> Board {
        Board {
            x: 0,
            o: 0,
            to_move: Player::X,
        }
    }

    /// Builds a board from occupied cell lists. Only structural validity
    /// (indices in range, no shared cell) is checked here; see
    /// [`Board::check_legal_nonterminal`].
    pub fn new(x_cells: &[usize], o_cells: &[usize], to_move: Player) -> Result<Board> {
        let x = mask(x_cells)?;
        let o = mask(o_cells)?;
        if x & o != 0 {
            return Err(TedError::IllegalBoard(
                "a cell is occupied by both sides".into(),
            ));
        }
        Ok(Board { x, o, to_move })
    }

    /// Like [`Board::new`] with the side to move inferred from piece counts.
    pub fn from_cells(x_cells: &[usize], o_cells: &[usize]) -> Result<Board> {
        let side = if x_cells.len() > o_cells.len() {
            Player::O
        } else {
            Player::X
        };
        Board::new(x_cells, o_cells, side)
    }

    pub fn x_plane(&self) -> [bool; 9] {
        std::array::from_fn(|i| self.x >> i & 1 == 1)
    }

    pub fn o_plane(&self) -> [bool; 9] {
        std::array::from_fn(|i| self.o >> i & 1 == 1)
    }

    pub fn side_to_move(&self) -> Player {
        self.to_move
    }

    fn pieces(&self, p: Player) -> u16 {
        match p {
            Player::X => self.x,
            Player::O => self.o,
        }
    }

    pub fn is_empty_cell(&self, cell: usize) -> bool {
        (self.x | self.o) >> cell & 1 == 0
    }

    pub fn empty_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..9).filter(|&c| self.is_empty_cell(c))
    }

    pub fn has_line(&self, p: Player) -> bool {
        has_line(self.pieces(p))
    }

    pub fn check_legal_nonterminal(&self) -> Result<()> {
        let nx = self.x.count_ones();
        let no = self.o.count_ones();
        let expected = if nx == no {
            Player::X
        } else if nx == no + 1 {
            Player::O
        } else {
            return Err(TedError::IllegalBoard(format!(
                "{nx} X pieces against {no} O pieces"
            )));
        };
        if expected != self.to_move {
            return Err(TedError::IllegalBoard(format!(
                "{:?} cannot be to move with {nx} X and {no} O pieces",
                self.to_move
            )));
        }
        if self.has_line(Player::X) || self.has_line(Player::O) {
            return Err(TedError::IllegalBoard("a line is already complete".into()));
        }
        if self.x | self.o == FULL {
            return Err(TedError::IllegalBoard("the board is full".into()));
        }
        Ok(())
    }

    pub fn is_legal_nonterminal(&self) -> bool {
        self.check_legal_nonterminal().is_ok()
    }

    /// Places a piece for the side to move and passes the turn.
    pub fn play(&self, cell: usize) -> Board {
        debug_assert!(self.is_empty_cell(cell));
        let bit = 1 << cell;
        match self.to_move {
            Player::X => Board {
                x: self.x | bit,
                o: self.o,
                to_move: Player::O,
            },
            Player::O => Board {
                x: self.x,
                o: self.o | bit,
                to_move: Player::X,
            },
        }
    }

    /// Cell states as base-3 digits (0 empty, 1 X, 2 O), cell 0 most
    /// significant. Orders boards lexicographically over cell states.
    pub fn code(&self) -> u32 {
        (0..9).fold(0, |acc, c| {
            let digit = if self.x >> c & 1 == 1 {
                1
            } else if self.o >> c & 1 == 1 {
                2
            } else {
                0
            };
            acc * 3 + digit
        })
    }
}

fn mask(cells: &[usize]) -> Result<u16> {
    cells.iter().try_fold(0u16, |m, &c| {
        if c >= 9 {
            Err(TedError::IllegalBoard(format!("cell {c} out of range")))
        } else {
            Ok(m | 1 << c)
        }
    })
}

fn has_line(pieces: u16) -> bool {
    LINES
        .iter()
        .any(|line| line.iter().all(|&c| pieces >> c & 1 == 1))
}

/// Empty cells where `pieces` would complete a line, ascending.
fn completing_cells(pieces: u16, occupied: u16) -> impl Iterator<Item = usize> {
    (0..9).filter(move |&c| occupied >> c & 1 == 0 && has_line(pieces | 1 << c))
}

/// True when placing at `cell` leaves some line through it with two own
/// pieces and an empty third cell.
fn creates_threat(own: u16, other: u16, cell: usize) -> bool {
    let own = own | 1 << cell;
    LINES.iter().filter(|l| l.contains(&cell)).any(|line| {
        let mine = line.iter().filter(|&&c| own >> c & 1 == 1).count();
        let theirs = line.iter().filter(|&&c| other >> c & 1 == 1).count();
        mine == 2 && theirs == 0
    })
}

const CORNERS: [usize; 4] = [0, 2, 6, 8];
const MIDDLES: [usize; 4] = [1, 3, 5, 7];

pub fn label_move(board: &Board) -> Result<MoveLabel> {
    board.check_legal_nonterminal()?;
    let own = board.pieces(board.to_move);
    let other = board.pieces(board.to_move.opponent());
    let occupied = own | other;
    let pick = |cell: usize, reason| MoveLabel {
        square: Square(cell as u8),
        reason,
    };

    if let Some(c) = completing_cells(own, occupied).next() {
        return Ok(pick(c, Reason::Win));
    }
    if let Some(c) = completing_cells(other, occupied).next() {
        return Ok(pick(c, Reason::Block));
    }
    if let Some(c) = board.empty_cells().find(|&c| creates_threat(own, other, c)) {
        return Ok(pick(c, Reason::Threat));
    }
    let cell = std::iter::once(4)
        .chain(CORNERS)
        .chain(MIDDLES)
        .find(|&c| board.is_empty_cell(c))
        .expect("non-terminal board has an empty cell");
    Ok(pick(cell, Reason::Empty))
}

/// X plane, O plane, then 1.0 when X is to move.
pub fn featurize(board: &Board) -> [f64; N_FEATURES] {
    let mut out = [0.0; N_FEATURES];
    for c in 0..9 {
        out[c] = f64::from(board.x >> c & 1);
        out[9 + c] = f64::from(board.o >> c & 1);
    }
    out[18] = if board.to_move == Player::X { 1.0 } else { 0.0 };
    out
}

/// Inverse of [`featurize`] for 0/1 vectors.
pub fn board_from_features(features: &[f64]) -> Result<Board> {
    if features.len() != N_FEATURES {
        return Err(TedError::DimensionMismatch(format!(
            "expected {N_FEATURES} features, got {}",
            features.len()
        )));
    }
    let bit = |v: f64| -> Result<bool> {
        match v {
            0.0 => Ok(false),
            1.0 => Ok(true),
            _ => Err(TedError::Format(format!("non-binary feature value {v}"))),
        }
    };
    let mut x = Vec::new();
    let mut o = Vec::new();
    for c in 0..9 {
        if bit(features[c])? {
            x.push(c);
        }
        if bit(features[9 + c])? {
            o.push(c);
        }
    }
    let side = if bit(features[18])? {
        Player::X
    } else {
        Player::O
    };
    Board::new(&x, &o, side)
}

/// All positions reachable by alternating play from the empty board that are
/// not yet decided and not full, in lexicographic cell-state order.
pub fn enumerate_legal_nonterminal() -> Vec<Board> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut stack = vec![Board::empty()];
    while let Some(board) = stack.pop() {
        if !seen.insert(board.code()) {
            continue;
        }
        if board.has_line(Player::X) || board.has_line(Player::O) || board.x | board.o == FULL {
            continue;
        }
        out.push(board);
        stack.extend(board.empty_cells().map(|c| board.play(c)));
    }
    out.sort_by_key(Board::code);
    out
}

pub fn feature_names() -> Vec<String> {
    (0..N_FEATURES).map(|i| format!("f{i}")).collect()
}

pub fn label_names() -> Vec<String> {
    (0..9).map(|i| i.to_string()).collect()
}

pub fn explanation_names() -> Vec<String> {
    Reason::ALL.iter().map(|r| r.name().to_string()).collect()
}

/// One instance per legal non-terminal position. The label is the preferred
/// square; with explanations the rule reason is attached as well.
pub fn build_dataset(with_explanations: bool) -> Dataset {
    let instances = enumerate_legal_nonterminal()
        .iter()
        .map(|board| {
            let mv = label_move(board).expect("enumerated boards are legal");
            LabeledInstance::new(
                featurize(board).to_vec(),
                LabelId(mv.square.index() as u32),
                with_explanations.then(|| mv.reason.id()),
            )
        })
        .collect();
    Dataset::new(Task::TicTacToe, instances).expect("generated instances are consistent")
}
