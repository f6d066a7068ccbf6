//! JSON reading and writing for spaces, elements, sequences, blocks,
//! trees, interval unions and certificates. Numbers may be given as JSON
//! numbers or as strings such as `"3/4"`.

use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::element::{FreeElement, RationalElement};
use crate::error::{Error, Result};
use crate::generate::Instance;
use crate::metric::FiniteMetricSpace;
use crate::scalar::{format_rational, parse_rational, rational_from_decimal, Scalar};
use crate::schur::{BlockSequence, ElementSequence};
use crate::transport::NormCertificate;
use crate::tree::{IntervalUnion, TreeEmbedding};

pub fn parse_json(text: &str) -> Result<Value> {
    if text.trim().is_empty() {
        return Err(Error::Parse("empty input".into()));
    }
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn field<'a>(value: &'a Value, name: &str) -> Result<&'a Value> {
    value
        .get(name)
        .ok_or_else(|| Error::Structural(format!("missing field {name:?}")))
}

fn array<'a>(value: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    value
        .as_array()
        .ok_or_else(|| Error::Structural(format!("{what} must be an array")))
}

pub fn number(value: &Value) -> Result<f64> {
    match value {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse(format!("bad number {n}"))),
        Value::String(s) => Ok(parse_rational(s)?.to_f64()),
        other => Err(Error::Structural(format!("expected a number, got {other}"))),
    }
}

pub fn rational(value: &Value) -> Result<BigRational> {
    match value {
        Value::Number(_) => rational_from_decimal(number(value)?),
        Value::String(s) => parse_rational(s),
        other => Err(Error::Structural(format!("expected a number, got {other}"))),
    }
}

pub fn space_from_value(value: &Value) -> Result<FiniteMetricSpace> {
    let points = array(field(value, "points")?, "points")?
        .iter()
        .map(|p| match p {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            other => Err(Error::Structural(format!("point label must be a string, got {other}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = array(field(value, "dist")?, "dist")?
        .iter()
        .map(|row| array(row, "dist row")?.iter().map(number).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    if rows.len() != points.len() {
        return Err(Error::Structural(format!(
            "{} points but {} distance rows",
            points.len(),
            rows.len()
        )));
    }
    FiniteMetricSpace::new(points, rows)
}

pub fn space_to_value(space: &FiniteMetricSpace) -> Value {
    json!({ "points": space.labels(), "dist": space.rows() })
}

fn coefficient_entries<'a>(space: &FiniteMetricSpace, value: &'a Value) -> Result<Vec<(usize, &'a Value)>> {
    let coeffs = field(value, "coeffs")?
        .as_object()
        .ok_or_else(|| Error::Structural("coeffs must be an object".into()))?;
    coeffs
        .iter()
        .map(|(label, a)| {
            let x = space.index_of(label).ok_or_else(|| Error::UnknownLabel(label.clone()))?;
            Ok((x, a))
        })
        .collect()
}

pub fn element_from_value(space: &FiniteMetricSpace, value: &Value) -> Result<FreeElement> {
    let mut element = FreeElement::zero();
    for (x, a) in coefficient_entries(space, value)? {
        let a = number(a)?;
        if !a.is_finite() {
            return Err(Error::Parse(format!("non-finite coefficient {a}")));
        }
        element.add_at(x, a);
    }
    Ok(element)
}

pub fn rational_element_from_value(space: &FiniteMetricSpace, value: &Value) -> Result<RationalElement> {
    let mut element = RationalElement::zero();
    for (x, a) in coefficient_entries(space, value)? {
        element.add_at(x, rational(a)?);
    }
    Ok(element)
}

pub fn element_to_value(space: &FiniteMetricSpace, element: &FreeElement) -> Value {
    let coeffs: Map<String, Value> = element
        .iter()
        .map(|(x, &a)| (space.label(x).to_string(), json!(a)))
        .collect();
    json!({ "coeffs": coeffs })
}

pub fn sequence_from_value(value: &Value) -> Result<ElementSequence> {
    let space = space_from_value(field(value, "space")?)?;
    let items = array(field(value, "items")?, "items")?
        .iter()
        .map(|item| element_from_value(&space, item))
        .collect::<Result<Vec<_>>>()?;
    ElementSequence::new(space, items)
}

pub fn sequence_to_value(seq: &ElementSequence) -> Value {
    let items: Vec<Value> = seq.items().iter().map(|m| element_to_value(seq.space(), m)).collect();
    json!({ "space": space_to_value(seq.space()), "items": items })
}

fn labels_of(space: &FiniteMetricSpace, points: &[usize]) -> Vec<String> {
    points.iter().map(|&x| space.label(x).to_string()).collect()
}

pub fn blocks_to_value(space: &FiniteMetricSpace, blocks: &BlockSequence) -> Value {
    let mut supports = vec![labels_of(space, blocks.f0())];
    supports.extend((0..blocks.len()).map(|n| labels_of(space, blocks.block_support(n))));
    json!({
        "gamma0": element_to_value(space, blocks.gamma0()),
        "blocks": blocks.blocks().iter().map(|b| element_to_value(space, b)).collect::<Vec<_>>(),
        "supports": supports,
    })
}

pub fn blocks_from_value(space: &FiniteMetricSpace, value: &Value) -> Result<BlockSequence> {
    let gamma0 = element_from_value(space, field(value, "gamma0")?)?;
    let blocks = array(field(value, "blocks")?, "blocks")?
        .iter()
        .map(|b| element_from_value(space, b))
        .collect::<Result<Vec<_>>>()?;
    match value.get("supports") {
        None => BlockSequence::new(gamma0, blocks),
        Some(supports) => {
            let supports = array(supports, "supports")?
                .iter()
                .map(|set| {
                    array(set, "support set")?
                        .iter()
                        .map(|label| {
                            let label = label
                                .as_str()
                                .ok_or_else(|| Error::Structural("support labels must be strings".into()))?;
                            space.index_of(label).ok_or_else(|| Error::UnknownLabel(label.to_string()))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            BlockSequence::with_supports(gamma0, blocks, supports)
        }
    }
}

/// A space file, or a sequence file whose items are `γ_0 + γ_n` carrying
/// the blocks alongside.
pub fn instance_to_value(instance: &Instance) -> Value {
    match instance {
        Instance::Space(space) => space_to_value(space),
        Instance::Blocks { space, blocks } => {
            let items: Vec<Value> = (0..blocks.len())
                .map(|n| element_to_value(space, &blocks.combined(n)))
                .collect();
            json!({
                "space": space_to_value(space),
                "items": items,
                "blocks": blocks_to_value(space, blocks),
            })
        }
    }
}

pub fn tree_to_value(space: &FiniteMetricSpace, tree: &TreeEmbedding) -> Value {
    let edges: Vec<Value> = tree
        .edges
        .iter()
        .map(|(u, v, len)| json!([u, v, len.to_f64()]))
        .collect();
    let exact: Vec<String> = tree.edges.iter().map(|(_, _, len)| format_rational(len)).collect();
    let map: Map<String, Value> = tree
        .map
        .iter()
        .enumerate()
        .map(|(x, node)| (space.label(x).to_string(), json!(node)))
        .collect();
    json!({ "nodes": tree.nodes, "edges": edges, "exact_lengths": exact, "map": map })
}

pub fn intervals_from_value(value: &Value) -> Result<IntervalUnion> {
    let intervals = array(field(value, "intervals")?, "intervals")?
        .iter()
        .map(|pair| match array(pair, "interval")?.as_slice() {
            [l, r] => Ok((rational(l)?, rational(r)?)),
            _ => Err(Error::Structural("each interval must be [l, r]".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    IntervalUnion::new(intervals)
}

pub fn intervals_to_value(union: &IntervalUnion) -> Value {
    let intervals: Vec<Value> = union
        .intervals()
        .iter()
        .map(|(l, r)| json!([format_rational(l), format_rational(r)]))
        .collect();
    json!({ "intervals": intervals })
}

pub fn certificate_to_value(space: &FiniteMetricSpace, cert: &NormCertificate) -> Value {
    let plan: Vec<Value> = cert
        .plan
        .flows
        .iter()
        .map(|&(s, t, mass)| json!([space.label(s), space.label(t), mass]))
        .collect();
    json!({
        "value": cert.value,
        "plan": plan,
        "cost": cert.plan.cost,
        "potential": cert.potential.values,
        "lip_constant": cert.potential.lip_constant,
        "gap": cert.gap,
        "base_coefficient_dropped": cert.base_coefficient_dropped,
    })
}
