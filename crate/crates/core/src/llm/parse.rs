//! Parsing of model answers in the `<nodes>` / `<edges>` tuple format.
//!
//! Answers are noisy: models wrap the blocks in reasoning text, use curly
//! quotes, leave keys unquoted or add trailing commas. The parser accepts all
//! of that but is strict about graph integrity.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{Edge, KnowledgeGraph, Node};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("missing <{block}> block")]
    MissingBlock { block: &'static str },
    #[error("malformed tuple in <{block}> at offset {offset}: {reason}")]
    MalformedTuple {
        block: &'static str,
        offset: usize,
        reason: String,
    },
    #[error("duplicate node id {0}")]
    DuplicateNodeId(u32),
    #[error("node ids start at {0}, expected 1")]
    IdsNotStartingAtOne(u32),
    #[error("edge ({src}, {dst}) references missing node {missing}")]
    DanglingEndpoint { src: u32, dst: u32, missing: u32 },
    #[error("self-loop on node {0}")]
    SelfLoop(u32),
    #[error("<nodes> block contains no nodes")]
    EmptyGraph,
}

/// Node ids listed in an importance answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportanceLabels {
    pub labels: BTreeMap<u32, u8>,
    /// Listed ids that are not nodes of the graph.
    pub unknown_ids: Vec<u32>,
}

/// Returns the body of the last complete `<tag>...</tag>` block. Models often
/// echo the format example while reasoning, so the final answer is the last
/// block.
fn find_block<'a>(text: &'a str, tag: &str) -> Option<(&'a str, usize)> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let mut search_end = text.len();
    while let Some(start) = text[..search_end].rfind(&open) {
        let body_start = start + open.len();
        if let Some(len) = text[body_start..].find(&close) {
            return Some((&text[body_start..body_start + len], body_start));
        }
        search_end = start;
    }
    None
}

fn normalize_quotes(s: &str) -> String {
    s.replace(['\u{201C}', '\u{201D}', '\u{201E}', '\u{2033}'], "\"")
}

struct Tuple {
    ids: Vec<u32>,
    fields: Option<BTreeMap<String, String>>,
    offset: usize,
}

struct Cursor {
    chars: Vec<(usize, char)>,
    pos: usize,
    base: usize,
    block: &'static str,
}

impl Cursor {
    fn new(src: &str, base: usize, block: &'static str) -> Self {
        Self {
            chars: src.char_indices().collect(),
            pos: 0,
            base,
            block,
        }
    }

    fn offset(&self) -> usize {
        self.base
            + self
                .chars
                .get(self.pos)
                .map_or_else(|| self.chars.last().map_or(0, |(i, _)| i + 1), |(i, _)| *i)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn skip_separators(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace() || c == ',') {
            self.pos += 1;
        }
    }

    fn err(&self, reason: impl Into<String>) -> ParseError {
        ParseError::MalformedTuple {
            block: self.block,
            offset: self.offset(),
            reason: reason.into(),
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        self.skip_ws();
        match self.bump() {
            Some(c) if c == want => Ok(()),
            Some(c) => Err(self.err(format!("expected '{want}', found '{c}'"))),
            None => Err(self.err(format!("expected '{want}', found end of block"))),
        }
    }

    fn integer(&mut self) -> Result<u32, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a node number"));
        }
        let digits: String = self.chars[start..self.pos].iter().map(|(_, c)| c).collect();
        digits
            .parse()
            .map_err(|_| self.err("node number out of range"))
    }

    fn quoted(&mut self, close: char) -> Result<String, ParseError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated string")),
                Some(c) if c == close => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some('u') => {
                        let hex: String = (0..4).filter_map(|_| self.bump()).collect();
                        let ch = u32::from_str_radix(&hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or_else(|| self.err("bad \\u escape"))?;
                        out.push(ch);
                    }
                    Some(c) => out.push(c),
                    None => return Err(self.err("unterminated escape")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn string_or_bare(&mut self, stops: &[char]) -> Result<String, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('"') => {
                self.pos += 1;
                self.quoted('"')
            }
            Some('\'') => {
                self.pos += 1;
                self.quoted('\'')
            }
            Some('\u{2018}') => {
                self.pos += 1;
                self.quoted('\u{2019}')
            }
            _ => {
                let start = self.pos;
                while self.peek().is_some_and(|c| !stops.contains(&c)) {
                    self.pos += 1;
                }
                let bare: String = self.chars[start..self.pos].iter().map(|(_, c)| c).collect();
                Ok(bare.trim().to_string())
            }
        }
    }

    fn object(&mut self) -> Result<BTreeMap<String, String>, ParseError> {
        self.expect('{')?;
        let mut fields = BTreeMap::new();
        loop {
            self.skip_separators();
            if self.peek() == Some('}') {
                self.pos += 1;
                return Ok(fields);
            }
            let key = self.string_or_bare(&[':', '}', ','])?;
            if key.is_empty() {
                return Err(self.err("empty key"));
            }
            self.expect(':')?;
            let value = self.string_or_bare(&[',', '}'])?;
            fields.insert(key.to_lowercase(), value);
            self.skip_ws();
            match self.peek() {
                Some(',') | Some('}') => {}
                Some(c) => return Err(self.err(format!("unexpected '{c}' after value"))),
                None => return Err(self.err("unterminated object")),
            }
        }
    }

    /// `(int, int..., {object}?)` with an optional trailing comma before `)`.
    fn tuple(&mut self, id_count: usize, object_required: bool) -> Result<Tuple, ParseError> {
        let offset = self.offset();
        self.expect('(')?;
        let mut ids = Vec::with_capacity(id_count);
        for i in 0..id_count {
            ids.push(self.integer()?);
            self.skip_ws();
            if i + 1 < id_count {
                self.expect(',')?;
            }
        }
        self.skip_separators();
        let fields = if self.peek() == Some('{') {
            Some(self.object()?)
        } else if object_required {
            return Err(self.err("expected an attribute object"));
        } else {
            None
        };
        self.skip_separators();
        self.expect(')')?;
        Ok(Tuple {
            ids,
            fields,
            offset,
        })
    }

    fn tuples(&mut self, id_count: usize, object_required: bool) -> Result<Vec<Tuple>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_separators();
            match self.peek() {
                None => return Ok(out),
                Some('(') => out.push(self.tuple(id_count, object_required)?),
                Some(c) => return Err(self.err(format!("unexpected '{c}' between tuples"))),
            }
        }
    }
}

fn block_tuples(
    raw: &str,
    block: &'static str,
    id_count: usize,
    object_required: bool,
) -> Result<Vec<Tuple>, ParseError> {
    let (body, base) = find_block(raw, block).ok_or(ParseError::MissingBlock { block })?;
    Cursor::new(body, base, block).tuples(id_count, object_required)
}

fn field(tuple: &Tuple, block: &'static str, key: &str) -> Result<String, ParseError> {
    tuple
        .fields
        .as_ref()
        .and_then(|f| f.get(key))
        .cloned()
        .ok_or_else(|| ParseError::MalformedTuple {
            block,
            offset: tuple.offset,
            reason: format!("missing \"{key}\""),
        })
}

/// Parses an extraction answer into a graph.
///
/// Edges repeated between the same ordered pair are collapsed into one edge
/// whose relation is the space-joined relations in order of appearance.
pub fn parse_kg_output(raw: &str, sentence_id: &str) -> Result<KnowledgeGraph, ParseError> {
    let raw = normalize_quotes(raw);
    let node_tuples = block_tuples(&raw, "nodes", 1, true)?;
    let edge_tuples = block_tuples(&raw, "edges", 2, true)?;

    let mut nodes = Vec::with_capacity(node_tuples.len());
    let mut ids = BTreeSet::new();
    for t in &node_tuples {
        let id = t.ids[0];
        let label = field(t, "nodes", "label")?;
        if label.trim().is_empty() {
            return Err(ParseError::MalformedTuple {
                block: "nodes",
                offset: t.offset,
                reason: "empty label".into(),
            });
        }
        let node_type = field(t, "nodes", "type").unwrap_or_default();
        if !ids.insert(id) {
            return Err(ParseError::DuplicateNodeId(id));
        }
        nodes.push(Node::new(id, node_type, label.trim()));
    }
    match ids.first() {
        None => return Err(ParseError::EmptyGraph),
        Some(&first) if first != 1 => return Err(ParseError::IdsNotStartingAtOne(first)),
        _ => {}
    }

    let mut edges: Vec<Edge> = Vec::with_capacity(edge_tuples.len());
    for t in &edge_tuples {
        let (src, dst) = (t.ids[0], t.ids[1]);
        let relation = field(t, "edges", "relation")?;
        if src == dst {
            return Err(ParseError::SelfLoop(src));
        }
        for endpoint in [src, dst] {
            if !ids.contains(&endpoint) {
                return Err(ParseError::DanglingEndpoint {
                    src,
                    dst,
                    missing: endpoint,
                });
            }
        }
        let relation = relation.trim();
        match edges.iter_mut().find(|e| e.src == src && e.dst == dst) {
            Some(existing) => {
                if !relation.is_empty() {
                    if !existing.relation.is_empty() {
                        existing.relation.push(' ');
                    }
                    existing.relation.push_str(relation);
                }
            }
            None => edges.push(Edge::new(src, dst, relation)),
        }
    }

    Ok(KnowledgeGraph::new(sentence_id, nodes, edges))
}

/// Reads the node ids listed in an importance answer. Listed nodes are
/// labeled 1, every other graph node 0. Ids that are not in the graph are
/// reported in `unknown_ids` and otherwise ignored.
pub fn parse_importance_output(
    raw: &str,
    kg: &KnowledgeGraph,
) -> Result<ImportanceLabels, ParseError> {
    let raw = normalize_quotes(raw);
    let tuples = block_tuples(&raw, "nodes", 1, false)?;
    let mut labels: BTreeMap<u32, u8> = kg.nodes.iter().map(|n| (n.id, 0)).collect();
    let mut unknown_ids = Vec::new();
    for t in tuples {
        let id = t.ids[0];
        match labels.get_mut(&id) {
            Some(v) => *v = 1,
            None => {
                if !unknown_ids.contains(&id) {
                    log::warn!(
                        "graph {}: importance answer lists unknown node {id}",
                        kg.sentence_id
                    );
                    unknown_ids.push(id);
                }
            }
        }
    }
    Ok(ImportanceLabels {
        labels,
        unknown_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::prompt::serialize_kg_output;
    use proptest::prelude::*;

    const FIG1: &str = r#"Let's think step by step. Reynolds is a person...
<nodes>
(1, {type: Person, label: "Reynolds"}),
(2, {type: Organization, label: "Metro-Goldwyn-Mayer"}),
</nodes>
<edges>
(1, 2, {relation: "signed with"}),
</edges>
That is the graph."#;

    #[test]
    fn parses_unquoted_keys_and_prose() {
        let kg = parse_kg_output(FIG1, "s1").unwrap();
        assert_eq!(
            kg.nodes,
            vec![
                Node::new(1, "Person", "Reynolds"),
                Node::new(2, "Organization", "Metro-Goldwyn-Mayer"),
            ]
        );
        assert_eq!(kg.edges, vec![Edge::new(1, 2, "signed with")]);
    }

    #[test]
    fn curly_quotes_accepted() {
        let raw = "<nodes>\n(1, {\u{201C}type\u{201D}: \u{201C}Person\u{201D}, \u{201C}label\u{201D}: \u{201C}Ann\u{201D}})\n</nodes>\n<edges>\n</edges>";
        let kg = parse_kg_output(raw, "s").unwrap();
        assert_eq!(kg.nodes[0].label, "Ann");
    }

    #[test]
    fn empty_edges_block() {
        let raw = "<nodes>(1, {\"type\": \"X\", \"label\": \"a\"}),(2, {\"type\": \"X\", \"label\": \"b\"})</nodes><edges>\n</edges>";
        let kg = parse_kg_output(raw, "s").unwrap();
        assert_eq!(kg.nodes.len(), 2);
        assert!(kg.edges.is_empty());
    }

    #[test]
    fn last_block_wins() {
        let raw = "Format:\n<nodes>\n(node_number, {...}),\n</nodes>\nAnswer:\n<nodes>(1, {\"type\": \"X\", \"label\": \"a\"})</nodes><edges></edges>";
        let kg = parse_kg_output(raw, "s").unwrap();
        assert_eq!(kg.nodes.len(), 1);
    }

    fn nodes3() -> &'static str {
        "<nodes>(1,{type:A,label:a}),(2,{type:A,label:b}),(3,{type:A,label:c})</nodes>"
    }

    #[test]
    fn dangling_endpoint() {
        let raw = format!("{}<edges>(1, 9, {{relation: \"x\"}})</edges>", nodes3());
        assert_eq!(
            parse_kg_output(&raw, "s"),
            Err(ParseError::DanglingEndpoint {
                src: 1,
                dst: 9,
                missing: 9
            })
        );
    }

    #[test]
    fn distinct_errors() {
        assert_eq!(
            parse_kg_output("no blocks here", "s"),
            Err(ParseError::MissingBlock { block: "nodes" })
        );
        assert_eq!(
            parse_kg_output(nodes3(), "s"),
            Err(ParseError::MissingBlock { block: "edges" })
        );
        let dup = "<nodes>(1,{type:A,label:a}),(1,{type:A,label:b})</nodes><edges></edges>";
        assert_eq!(
            parse_kg_output(dup, "s"),
            Err(ParseError::DuplicateNodeId(1))
        );
        let late = "<nodes>(2,{type:A,label:a})</nodes><edges></edges>";
        assert_eq!(
            parse_kg_output(late, "s"),
            Err(ParseError::IdsNotStartingAtOne(2))
        );
        let selfloop = format!("{}<edges>(2, 2, {{relation: x}})</edges>", nodes3());
        assert_eq!(
            parse_kg_output(&selfloop, "s"),
            Err(ParseError::SelfLoop(2))
        );
        let bad = "<nodes>(1, type: A)</nodes><edges></edges>";
        assert!(matches!(
            parse_kg_output(bad, "s"),
            Err(ParseError::MalformedTuple { block: "nodes", .. })
        ));
        assert_eq!(
            parse_kg_output("<nodes></nodes><edges></edges>", "s"),
            Err(ParseError::EmptyGraph)
        );
    }

    #[test]
    fn repeated_edges_collapse() {
        let raw = format!(
            "{}<edges>(1,2,{{relation: \"went\"}}),(1,2,{{relation:\"to\"}}),(2,1,{{relation:back}})</edges>",
            nodes3()
        );
        let kg = parse_kg_output(&raw, "s").unwrap();
        assert_eq!(
            kg.edges,
            vec![Edge::new(1, 2, "went to"), Edge::new(2, 1, "back")]
        );
    }

    #[test]
    fn importance_listing() {
        let kg = KnowledgeGraph::skeleton(4, &[]);
        let raw = "<nodes>\n(1, {\"type\": \"Entity\", \"label\": \"n1\"}),\n(3, {\"type\": \"Entity\", \"label\": \"n3\"}),\n</nodes>";
        let labels = parse_importance_output(raw, &kg).unwrap();
        assert_eq!(
            labels.labels,
            BTreeMap::from([(1, 1), (2, 0), (3, 1), (4, 0)])
        );
        assert!(labels.unknown_ids.is_empty());
    }

    #[test]
    fn importance_unknown_ids_ignored() {
        let kg = KnowledgeGraph::skeleton(3, &[]);
        let labels = parse_importance_output("<nodes>(7)</nodes>", &kg).unwrap();
        assert_eq!(labels.labels, BTreeMap::from([(1, 0), (2, 0), (3, 0)]));
        assert_eq!(labels.unknown_ids, vec![7]);
    }

    #[test]
    fn importance_requires_block() {
        let kg = KnowledgeGraph::skeleton(1, &[]);
        assert_eq!(
            parse_importance_output("node 1 is important", &kg),
            Err(ParseError::MissingBlock { block: "nodes" })
        );
    }

    fn arb_graph() -> impl Strategy<Value = KnowledgeGraph> {
        let label = "[A-Za-z0-9'\"(),{}:\\\\-][A-Za-z0-9 '\"(),{}:\\\\-]{0,10}[A-Za-z0-9)\"]";
        (1usize..7)
            .prop_flat_map(move |n| {
                (
                    proptest::collection::vec(("[A-Z][a-z]{0,6}", label), n),
                    proptest::collection::btree_set((1..=n as u32, 1..=n as u32), 0..n * 2),
                    proptest::collection::vec("[a-z ]{0,8}", n * 2),
                )
            })
            .prop_map(|(nodes, pairs, relations)| {
                let nodes = nodes
                    .into_iter()
                    .zip(1u32..)
                    .map(|((t, l), id)| Node::new(id, t, l))
                    .collect();
                let edges = pairs
                    .into_iter()
                    .filter(|(a, b)| a != b)
                    .zip(relations)
                    .map(|((a, b), r)| Edge::new(a, b, r.trim()))
                    .collect();
                KnowledgeGraph::new("p", nodes, edges)
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(kg in arb_graph()) {
            let parsed = parse_kg_output(&serialize_kg_output(&kg), "p").unwrap();
            prop_assert_eq!(parsed, kg);
        }
    }
}
