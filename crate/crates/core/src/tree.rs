//! Ordered, labeled rooted trees and their bracket-notation exchange format.
//!
//! A tree serializes as `{label{child}{child}...}`. Inside a label the
//! characters `{`, `}` and `\` are escaped with a backslash, so any label
//! round-trips.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An ordered labeled tree. Children are kept in source order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SyntaxTree {
    pub label: String,
    pub children: Vec<SyntaxTree>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeFormatError {
    #[error("expected '{{' at byte {0}")]
    ExpectedOpen(usize),
    #[error("unbalanced brackets: missing '}}' for node opened at byte {0}")]
    Unclosed(usize),
    #[error("dangling escape at end of input")]
    DanglingEscape,
    #[error("trailing input after tree at byte {0}")]
    Trailing(usize),
    #[error("empty input")]
    Empty,
}

impl SyntaxTree {
    pub fn leaf(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn new(label: impl Into<String>, children: Vec<SyntaxTree>) -> Self {
        Self {
            label: label.into(),
            children,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut count = 0;
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            count += 1;
            stack.extend(node.children.iter());
        }
        count
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(SyntaxTree::depth)
            .max()
            .unwrap_or(0)
    }

    /// Labels in preorder.
    pub fn preorder_labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node.label.as_str());
            stack.extend(node.children.iter().rev());
        }
        out
    }

    /// Serializes to bracket notation.
    pub fn to_bracket(&self) -> String {
        let mut out = String::with_capacity(self.size() * 8);
        write_bracket(self, &mut out);
        out
    }

    /// Parses bracket notation produced by [`SyntaxTree::to_bracket`].
    pub fn from_bracket(text: &str) -> Result<Self, TreeFormatError> {
        let bytes = text.trim_end_matches(['\n', '\r']).as_bytes();
        if bytes.is_empty() {
            return Err(TreeFormatError::Empty);
        }
        let mut parser = BracketParser { bytes, pos: 0 };
        let tree = parser.node()?;
        if parser.pos != bytes.len() {
            return Err(TreeFormatError::Trailing(parser.pos));
        }
        Ok(tree)
    }
}

impl fmt::Display for SyntaxTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracket())
    }
}

fn write_bracket(tree: &SyntaxTree, out: &mut String) {
    out.push('{');
    for c in tree.label.chars() {
        if matches!(c, '{' | '}' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    for child in &tree.children {
        write_bracket(child, out);
    }
    out.push('}');
}

struct BracketParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BracketParser<'_> {
    // Iterative so that very deep trees cannot overflow the stack.
    fn node(&mut self) -> Result<SyntaxTree, TreeFormatError> {
        let mut stack: Vec<(usize, SyntaxTree)> = Vec::new();
        loop {
            if self.bytes.get(self.pos) != Some(&b'{') {
                return Err(match stack.last() {
                    Some((open, _)) if self.pos >= self.bytes.len() => {
                        TreeFormatError::Unclosed(*open)
                    }
                    _ => TreeFormatError::ExpectedOpen(self.pos),
                });
            }
            let open = self.pos;
            self.pos += 1;
            let label = self.label()?;
            stack.push((open, SyntaxTree::leaf(label)));
            // Close as many nodes as possible, then expect the next child.
            loop {
                match self.bytes.get(self.pos) {
                    Some(b'}') => {
                        self.pos += 1;
                        let (_, done) = stack.pop().expect("non-empty stack");
                        match stack.last_mut() {
                            Some((_, parent)) => parent.children.push(done),
                            None => return Ok(done),
                        }
                    }
                    Some(b'{') => break,
                    Some(_) => return Err(TreeFormatError::ExpectedOpen(self.pos)),
                    None => {
                        let (open, _) = stack.last().expect("non-empty stack");
                        return Err(TreeFormatError::Unclosed(*open));
                    }
                }
            }
        }
    }

    fn label(&mut self) -> Result<String, TreeFormatError> {
        let mut raw = Vec::new();
        while let Some(&b) = self.bytes.get(self.pos) {
            match b {
                b'{' | b'}' => break,
                b'\\' => {
                    let next = *self
                        .bytes
                        .get(self.pos + 1)
                        .ok_or(TreeFormatError::DanglingEscape)?;
                    raw.push(next);
                    self.pos += 2;
                }
                _ => {
                    raw.push(b);
                    self.pos += 1;
                }
            }
        }
        // Input is a &str and escapes only ever precede ASCII, so this is valid UTF-8.
        Ok(String::from_utf8(raw).expect("labels are valid UTF-8"))
    }
}
