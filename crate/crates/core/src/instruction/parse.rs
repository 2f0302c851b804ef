//! Instruction mini-language.
//!
//! ```text
//! instruction := group (("then" | ";") group)*
//! group       := task ("and" task)*
//! task        := phrase ["near" phrase] ["with" phrase ("," phrase)*]
//! phrase      := word+            (any word that is not a keyword)
//! ```
//!
//! Keywords are case-insensitive. Groups separated by "then" are visited in
//! order; tasks joined by "and" are unordered.

use super::graph::{Task, TaskGraph, TaskId};
use super::InstructionError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Comma,
    Semicolon,
}

fn syntax(position: usize, message: impl Into<String>) -> InstructionError {
    InstructionError::Syntax {
        position,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, InstructionError> {
    let mut out = Vec::new();
    let mut word_start: Option<usize> = None;
    let is_word = |c: char| c.is_alphanumeric() || matches!(c, '-' | '\'' | '_');
    for (i, c) in text.char_indices() {
        if is_word(c) {
            word_start.get_or_insert(i);
            continue;
        }
        if let Some(s) = word_start.take() {
            out.push((Tok::Word(text[s..i].to_lowercase()), s));
        }
        match c {
            ',' => out.push((Tok::Comma, i)),
            ';' => out.push((Tok::Semicolon, i)),
            c if c.is_whitespace() => {}
            c => return Err(syntax(i, format!("unexpected character '{c}'"))),
        }
    }
    if let Some(s) = word_start {
        out.push((Tok::Word(text[s..].to_lowercase()), s));
    }
    Ok(out)
}

const KEYWORDS: &[&str] = &["then", "and", "near", "with"];

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |&(_, p)| p)
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w == kw)
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Word(w)) => format!("'{w}'"),
            Some(Tok::Comma) => "','".into(),
            Some(Tok::Semicolon) => "';'".into(),
        }
    }

    fn phrase(&mut self, what: &str) -> Result<String, InstructionError> {
        let mut words = Vec::new();
        while let Some(Tok::Word(w)) = self.peek() {
            if KEYWORDS.contains(&w.as_str()) {
                break;
            }
            words.push(w.clone());
            self.pos += 1;
        }
        if words.is_empty() {
            return Err(syntax(self.offset(), format!("expected {what}, found {}", self.describe())));
        }
        Ok(words.join(" "))
    }

    fn task(&mut self, id: TaskId) -> Result<Task, InstructionError> {
        let target_text = self.phrase("a target")?;
        let mut anchor_text = None;
        if self.keyword("near") {
            self.pos += 1;
            anchor_text = Some(self.phrase("an anchor after 'near'")?);
        }
        let mut context_texts = Vec::new();
        if self.keyword("with") {
            self.pos += 1;
            context_texts.push(self.phrase("a context after 'with'")?);
            while self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
                context_texts.push(self.phrase("a context after ','")?);
            }
        }
        Ok(Task {
            id,
            target_text,
            anchor_text,
            context_texts,
        })
    }
}

/// Parses an instruction into a task graph. Task ids are 1-based in textual
/// order; every task of a group precedes every task of the next group.
pub fn parse(instruction: &str) -> Result<TaskGraph, InstructionError> {
    let toks = tokenize(instruction)?;
    if toks.is_empty() {
        return Err(syntax(0, "empty instruction"));
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: instruction.len(),
    };
    let mut groups: Vec<Vec<Task>> = vec![Vec::new()];
    let mut next_id: TaskId = 1;
    loop {
        let t = p.task(next_id)?;
        next_id += 1;
        groups.last_mut().expect("at least one group").push(t);
        if p.peek().is_none() {
            break;
        }
        if p.keyword("and") {
            p.pos += 1;
        } else if p.keyword("then") || p.peek() == Some(&Tok::Semicolon) {
            p.pos += 1;
            groups.push(Vec::new());
        } else {
            return Err(syntax(p.offset(), format!("unexpected {}", p.describe())));
        }
    }
    let mut temporal_edges = Vec::new();
    for w in groups.windows(2) {
        for a in &w[0] {
            for b in &w[1] {
                temporal_edges.push((a.id, b.id));
            }
        }
    }
    let tasks: Vec<Task> = groups.into_iter().flatten().collect();
    let semantic_sequence = tasks.iter().map(|t| t.id).collect();
    Ok(TaskGraph {
        tasks,
        temporal_edges,
        semantic_sequence,
    })
}

fn render_task(t: &Task) -> String {
    let mut s = t.target_text.clone();
    if let Some(a) = &t.anchor_text {
        s.push_str(" near ");
        s.push_str(a);
    }
    if !t.context_texts.is_empty() {
        s.push_str(" with ");
        s.push_str(&t.context_texts.join(", "));
    }
    s
}

/// Canonical instruction text: temporal layers joined by "then", tasks in a
/// layer joined by "and".
pub fn render(graph: &TaskGraph) -> Result<String, InstructionError> {
    graph.validate()?;
    let layers = graph.layers().expect("validated graphs are acyclic");
    Ok(layers
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|&id| render_task(graph.task(id).expect("layer ids exist")))
                .collect::<Vec<_>>()
                .join(" and ")
        })
        .collect::<Vec<_>>()
        .join(" then "))
}
