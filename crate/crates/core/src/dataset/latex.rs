//! Minimal LaTeX math tree: control sequences, single characters and brace groups.

use super::DatasetError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// `\name` without the backslash; control symbols have a one-character name.
    Cmd(String),
    Char(char),
    Group(Vec<Node>),
    Space,
}

impl Node {
    fn is_control_word(&self) -> bool {
        matches!(self, Node::Cmd(n) if n.chars().all(|c| c.is_ascii_alphabetic()))
    }
}

pub fn parse(src: &str) -> Result<Vec<Node>, DatasetError> {
    let chars: Vec<char> = src.chars().collect();
    let mut stack: Vec<Vec<Node>> = vec![Vec::new()];
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\\' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_alphabetic() {
                    j += 1;
                }
                if j == i + 1 {
                    let Some(&sym) = chars.get(i + 1) else {
                        return Err(DatasetError::MalformedLatex("trailing backslash".into()));
                    };
                    j = i + 2;
                    stack.last_mut().unwrap().push(Node::Cmd(sym.to_string()));
                } else {
                    let name: String = chars[i + 1..j].iter().collect();
                    stack.last_mut().unwrap().push(Node::Cmd(name));
                }
                i = j;
                continue;
            }
            '{' => stack.push(Vec::new()),
            '}' => {
                if stack.len() == 1 {
                    return Err(DatasetError::UnbalancedBraces);
                }
                let g = stack.pop().unwrap();
                stack.last_mut().unwrap().push(Node::Group(g));
            }
            c if c.is_whitespace() => {
                let top = stack.last_mut().unwrap();
                if top.last() != Some(&Node::Space) {
                    top.push(Node::Space);
                }
            }
            c => stack.last_mut().unwrap().push(Node::Char(c)),
        }
        i += 1;
    }
    if stack.len() != 1 {
        return Err(DatasetError::UnbalancedBraces);
    }
    Ok(stack.pop().unwrap())
}

/// Canonical form: `\dfrac`/`\tfrac` become `\frac`, fraction arguments are
/// braced, doubled braces collapse and insignificant spaces disappear.
pub fn canonicalize(nodes: Vec<Node>) -> Vec<Node> {
    let mut items: Vec<Node> = nodes
        .into_iter()
        .filter(|n| *n != Node::Space)
        .map(|n| match n {
            Node::Cmd(name) if name == "dfrac" || name == "tfrac" => Node::Cmd("frac".into()),
            Node::Group(children) => Node::Group(collapse(canonicalize(children))),
            other => other,
        })
        .collect();
    let mut i = 0;
    while i < items.len() {
        if items[i] == Node::Cmd("frac".into()) {
            for k in 1..=2 {
                if let Some(arg) = items.get_mut(i + k) {
                    if !matches!(arg, Node::Group(_)) {
                        *arg = Node::Group(vec![arg.clone()]);
                    }
                }
            }
        }
        i += 1;
    }
    items
}

fn collapse(children: Vec<Node>) -> Vec<Node> {
    match <[Node; 1]>::try_from(children) {
        Ok([Node::Group(inner)]) => inner,
        Ok([other]) => vec![other],
        Err(children) => children,
    }
}

pub fn serialize(nodes: &[Node]) -> String {
    let mut out = String::new();
    write_nodes(nodes, &mut out);
    out
}

fn write_nodes(nodes: &[Node], out: &mut String) {
    for (k, n) in nodes.iter().enumerate() {
        match n {
            Node::Cmd(name) => {
                out.push('\\');
                out.push_str(name);
            }
            Node::Char(c) => out.push(*c),
            Node::Group(children) => {
                out.push('{');
                write_nodes(children, out);
                out.push('}');
            }
            Node::Space => out.push(' '),
        }
        if n.is_control_word() {
            if let Some(Node::Char(c)) = nodes.get(k + 1) {
                if c.is_ascii_alphabetic() {
                    out.push(' ');
                }
            }
        }
    }
}
