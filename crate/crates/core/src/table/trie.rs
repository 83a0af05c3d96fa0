/// One node of a [`Trie`]. Children of a branch occupy `radix` consecutive
/// slots starting at the stored offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Empty,
    Leaf(u32),
    Branch(u32),
    /// The digit at this depth does not matter.
    Any(u32),
}

/// Arena trie over digit indices with variable-depth leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trie {
    radix: usize,
    nodes: Vec<Node>,
}

impl Trie {
    pub fn new(radix: usize) -> Self {
        Self { radix, nodes: vec![Node::Empty] }
    }

    pub fn radix(&self) -> usize {
        self.radix
    }

    pub const ROOT: usize = 0;

    pub fn node(&self, i: usize) -> Node {
        self.nodes[i]
    }

    pub fn set(&mut self, i: usize, n: Node) {
        self.nodes[i] = n;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        matches!(self.nodes[Self::ROOT], Node::Empty)
    }

    /// Appends `count` empty nodes and returns the index of the first.
    pub fn alloc(&mut self, count: usize) -> usize {
        let first = self.nodes.len();
        self.nodes.resize(first + count, Node::Empty);
        first
    }

    /// Turns an empty node into a branch and returns its first child index.
    pub fn make_branch(&mut self, i: usize) -> usize {
        let first = self.alloc(self.radix);
        self.nodes[i] = Node::Branch(first as u32);
        first
    }

    pub fn make_any(&mut self, i: usize) -> usize {
        let child = self.alloc(1);
        self.nodes[i] = Node::Any(child as u32);
        child
    }

    /// Follows `window` (digit indices, most significant first) to a leaf.
    pub fn lookup(&self, window: &[u32]) -> Option<u32> {
        let mut i = Self::ROOT;
        for &d in window {
            match self.nodes[i] {
                Node::Leaf(q) => return Some(q),
                Node::Branch(c) => i = c as usize + d as usize,
                Node::Any(c) => i = c as usize,
                Node::Empty => return None,
            }
        }
        match self.nodes[i] {
            Node::Leaf(q) => Some(q),
            _ => None,
        }
    }

    /// Lookup with the digit at depth `k` supplied by a closure.
    pub fn lookup_with(&self, depth: usize, digit: impl Fn(usize) -> u32) -> Option<u32> {
        let mut i = Self::ROOT;
        for k in 0..depth {
            match self.nodes[i] {
                Node::Leaf(q) => return Some(q),
                Node::Branch(c) => i = c as usize + digit(k) as usize,
                Node::Any(c) => i = c as usize,
                Node::Empty => return None,
            }
        }
        match self.nodes[i] {
            Node::Leaf(q) => Some(q),
            _ => None,
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    /// Visits stored leaves in depth-first digit order. Each call receives
    /// the path (None for a wildcard) and the leaf value.
    pub fn for_each_leaf(&self, mut f: impl FnMut(&[Option<u32>], u32)) {
        let mut path = Vec::new();
        self.walk(Self::ROOT, &mut path, &mut f);
    }

    fn walk(&self, i: usize, path: &mut Vec<Option<u32>>, f: &mut impl FnMut(&[Option<u32>], u32)) {
        match self.nodes[i] {
            Node::Empty => {}
            Node::Leaf(q) => f(path, q),
            Node::Any(c) => {
                path.push(None);
                self.walk(c as usize, path, f);
                path.pop();
            }
            Node::Branch(c) => {
                for d in 0..self.radix {
                    path.push(Some(d as u32));
                    self.walk(c as usize + d, path, f);
                    path.pop();
                }
            }
        }
    }

    /// First path (as in [`Trie::for_each_leaf`]) that ends in an empty node
    /// before reaching `depth` digits or a leaf.
    pub fn find_gap(&self, depth: usize) -> Option<Vec<Option<u32>>> {
        let mut path = Vec::new();
        self.gap(Self::ROOT, depth, &mut path).then_some(path)
    }

    fn gap(&self, i: usize, depth: usize, path: &mut Vec<Option<u32>>) -> bool {
        match self.nodes[i] {
            Node::Leaf(_) => false,
            Node::Empty => true,
            _ if path.len() == depth => true,
            Node::Any(c) => {
                path.push(None);
                if self.gap(c as usize, depth, path) {
                    return true;
                }
                path.pop();
                false
            }
            Node::Branch(c) => {
                for d in 0..self.radix {
                    path.push(Some(d as u32));
                    if self.gap(c as usize + d, depth, path) {
                        return true;
                    }
                    path.pop();
                }
                false
            }
        }
    }
}
