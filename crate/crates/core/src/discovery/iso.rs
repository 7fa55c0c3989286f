//! Label- and class-preserving structural comparison of two nets.
//!
//! Both nets are coloured by iterated refinement: a place starts from its
//! initial/final token counts, a transition from its label and class (or
//! `⊥`), and every round re-colours each node by its own colour plus the
//! sorted colours of its neighbours on each side. Colours are interned in a
//! table shared by both nets, so equal colour multisets after the last
//! round mean the nets have the same canonical form.

use std::collections::BTreeMap;

use crate::petri::{LabeledPetriNet, PlaceId};

struct Colours {
    places: Vec<usize>,
    transitions: Vec<usize>,
}

fn intern(table: &mut BTreeMap<String, usize>, key: String) -> usize {
    let next = table.len();
    *table.entry(key).or_insert(next)
}

fn initial_colours(net: &LabeledPetriNet, table: &mut BTreeMap<String, usize>) -> Colours {
    let places = (0..net.place_count())
        .map(|i| {
            let p = PlaceId(i);
            let key = format!(
                "P({},{})",
                net.initial_marking().tokens(p),
                net.final_marking().tokens(p)
            );
            intern(table, key)
        })
        .collect();
    let transitions = net
        .transitions()
        .iter()
        .map(|t| {
            let key = match (&t.label, t.class) {
                (Some(label), Some(class)) => format!("T({label},{class})"),
                _ => "T(⊥)".to_string(),
            };
            intern(table, key)
        })
        .collect();
    Colours { places, transitions }
}

fn refine(net: &LabeledPetriNet, c: &Colours, table: &mut BTreeMap<String, usize>) -> Colours {
    let mut place_in: Vec<Vec<usize>> = vec![Vec::new(); net.place_count()];
    let mut place_out: Vec<Vec<usize>> = vec![Vec::new(); net.place_count()];
    let mut transitions = Vec::with_capacity(c.transitions.len());
    for t in net.transition_ids() {
        let mut pre: Vec<usize> = net.inputs(t).iter().map(|p| c.places[p.0]).collect();
        let mut post: Vec<usize> = net.outputs(t).iter().map(|p| c.places[p.0]).collect();
        pre.sort_unstable();
        post.sort_unstable();
        transitions.push(intern(table, format!("T{}|{:?}|{:?}", c.transitions[t.0], pre, post)));
        for p in net.inputs(t) {
            place_out[p.0].push(c.transitions[t.0]);
        }
        for p in net.outputs(t) {
            place_in[p.0].push(c.transitions[t.0]);
        }
    }
    let places = (0..net.place_count())
        .map(|i| {
            place_in[i].sort_unstable();
            place_out[i].sort_unstable();
            intern(
                table,
                format!("P{}|{:?}|{:?}", c.places[i], place_in[i], place_out[i]),
            )
        })
        .collect();
    Colours { places, transitions }
}

fn histogram(colours: &[usize]) -> Vec<usize> {
    let mut v = colours.to_vec();
    v.sort_unstable();
    v
}

pub fn structurally_isomorphic(a: &LabeledPetriNet, b: &LabeledPetriNet) -> bool {
    if a.place_count() != b.place_count()
        || a.transitions().len() != b.transitions().len()
        || a.arcs().len() != b.arcs().len()
    {
        return false;
    }
    let mut table = BTreeMap::new();
    let mut ca = initial_colours(a, &mut table);
    let mut cb = initial_colours(b, &mut table);
    let rounds = a.place_count() + a.transitions().len();
    for _ in 0..=rounds {
        if histogram(&ca.places) != histogram(&cb.places)
            || histogram(&ca.transitions) != histogram(&cb.transitions)
        {
            return false;
        }
        let na = refine(a, &ca, &mut table);
        let nb = refine(b, &cb, &mut table);
        let stable = distinct(&na.places) == distinct(&ca.places)
            && distinct(&na.transitions) == distinct(&ca.transitions)
            && distinct(&nb.places) == distinct(&cb.places)
            && distinct(&nb.transitions) == distinct(&cb.transitions);
        ca = na;
        cb = nb;
        if stable {
            break;
        }
    }
    histogram(&ca.places) == histogram(&cb.places) && histogram(&ca.transitions) == histogram(&cb.transitions)
}

fn distinct(colours: &[usize]) -> usize {
    let mut v = colours.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}
