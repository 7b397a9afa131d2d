//! Compact s-expression text form for trees, used by the CLI and golden
//! tests: `(< K2 (leaf Gap0) (= K2 (leaf K2) (leaf Gap2)))`. Internal
//! nodes are `(op keyname yes no)`; leaves list class labels, where a key
//! class appears as the key's name and a gap as `GapI`.

use super::{Node, Tree};
use crate::instances::{CmpOp, Instance, QueryClass, Weight};
use thiserror::Error;

#[derive(Error, Debug, PartialEq, Eq)]
pub enum SexprError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad gap label `{0}`")]
    BadGap(String),
    #[error("trailing input after tree")]
    TrailingInput,
}

pub fn to_sexpr<W: Weight>(tree: &Tree, inst: &Instance<W>) -> String {
    let mut out = String::new();
    write_node(&tree.root, inst, &mut out);
    out
}

fn write_node<W: Weight>(node: &Node, inst: &Instance<W>, out: &mut String) {
    match node {
        Node::Leaf { classes } => {
            out.push_str("(leaf");
            for &c in classes {
                out.push(' ');
                out.push_str(&inst.class_label(c));
            }
            out.push(')');
        }
        Node::Internal { op, key, yes, no } => {
            out.push('(');
            out.push_str(op.token());
            out.push(' ');
            out.push_str(inst.key_name(*key));
            out.push(' ');
            write_node(yes, inst, out);
            out.push(' ');
            write_node(no, inst, out);
            out.push(')');
        }
    }
}

pub fn parse_sexpr<W: Weight>(text: &str, inst: &Instance<W>) -> Result<Tree, SexprError> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let root = parse_node(&tokens, &mut pos, inst)?;
    if pos != tokens.len() {
        return Err(SexprError::TrailingInput);
    }
    Ok(Tree::new(root))
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn parse_node<W: Weight>(
    tokens: &[String],
    pos: &mut usize,
    inst: &Instance<W>,
) -> Result<Node, SexprError> {
    expect(tokens, pos, "(")?;
    let head = next(tokens, pos)?;
    if head == "leaf" {
        let mut classes = Vec::new();
        loop {
            let tok = next(tokens, pos)?;
            if tok == ")" {
                break;
            }
            classes.push(parse_class(&tok, inst)?);
        }
        return Ok(Node::leaf(classes));
    }
    let op = match head.as_str() {
        "<" => CmpOp::Lt,
        "<=" => CmpOp::Le,
        "=" => CmpOp::Eq,
        other => return Err(SexprError::UnexpectedToken(other.to_string())),
    };
    let key_name = next(tokens, pos)?;
    let key = key_index(&key_name, inst)?;
    let yes = parse_node(tokens, pos, inst)?;
    let no = parse_node(tokens, pos, inst)?;
    expect(tokens, pos, ")")?;
    Ok(Node::internal(op, key, yes, no))
}

fn parse_class<W: Weight>(tok: &str, inst: &Instance<W>) -> Result<QueryClass, SexprError> {
    if let Some(rest) = tok.strip_prefix("Gap") {
        // A key literally named "GapI" shadows the gap label.
        if !inst.keys().iter().any(|k| k == tok) {
            let i: usize = rest.parse().map_err(|_| SexprError::BadGap(tok.to_string()))?;
            if i > inst.n() {
                return Err(SexprError::BadGap(tok.to_string()));
            }
            return Ok(QueryClass::Gap(i));
        }
    }
    Ok(QueryClass::Key(key_index(tok, inst)?))
}

fn key_index<W: Weight>(name: &str, inst: &Instance<W>) -> Result<usize, SexprError> {
    inst.keys()
        .iter()
        .position(|k| k == name)
        .map(|i| i + 1)
        .ok_or_else(|| SexprError::UnknownKey(name.to_string()))
}

fn next(tokens: &[String], pos: &mut usize) -> Result<String, SexprError> {
    let tok = tokens.get(*pos).ok_or(SexprError::UnexpectedEnd)?;
    *pos += 1;
    Ok(tok.clone())
}

fn expect(tokens: &[String], pos: &mut usize, want: &str) -> Result<(), SexprError> {
    let tok = next(tokens, pos)?;
    if tok != want {
        return Err(SexprError::UnexpectedToken(tok));
    }
    Ok(())
}
