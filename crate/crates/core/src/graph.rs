//! Small digraph helpers over adjacency lists indexed `0..n`.

/// Strongly connected components of the subgraph induced by `members`
/// (iterative Tarjan). Returns the component of every vertex
/// (`usize::MAX` for non-members) and the component count.
pub(crate) fn induced_components(out: &[Vec<usize>], members: &[bool]) -> (Vec<usize>, usize) {
    const UNSEEN: usize = usize::MAX;
    let n = out.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut count = 0;
    // (vertex, next out-edge position)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for start in 0..n {
        if !members[start] || index[start] != UNSEEN {
            continue;
        }
        call.push((start, 0));
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;

        while let Some(top) = call.last_mut() {
            let v = top.0;
            if let Some(&w) = out[v].get(top.1) {
                top.1 += 1;
                if !members[w] {
                    continue;
                }
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    comp[w] = count;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    (comp, count)
}

/// A member from which every member is reachable inside the induced
/// subgraph, or `None`. Such a vertex exists iff the condensation has a
/// single source component; the smallest index in it is returned.
pub(crate) fn spanning_root(out: &[Vec<usize>], members: &[bool]) -> Option<usize> {
    let (comp, count) = induced_components(out, members);
    if count == 0 {
        return None;
    }
    let mut has_incoming = vec![false; count];
    for (u, targets) in out.iter().enumerate() {
        if !members[u] {
            continue;
        }
        for &v in targets {
            if members[v] && comp[u] != comp[v] {
                has_incoming[comp[v]] = true;
            }
        }
    }
    let mut sources = (0..count).filter(|&c| !has_incoming[c]);
    let source = sources.next()?;
    if sources.next().is_some() {
        return None;
    }
    // a DAG's only source reaches every component
    (0..out.len()).find(|&v| comp[v] == source)
}
