/// Arena with stable ids and slot reuse. Ids stay valid until removed.
#[derive(Clone, Debug)]
pub(crate) struct Slab<T> {
    slots: Vec<Option<T>>,
    free: Vec<u32>,
    live: usize,
}

impl<T> Default for Slab<T> {
    fn default() -> Self {
        Slab {
            slots: Vec::new(),
            free: Vec::new(),
            live: 0,
        }
    }
}

impl<T> Slab<T> {
    pub fn insert(&mut self, value: T) -> u32 {
        self.live += 1;
        match self.free.pop() {
            Some(id) => {
                debug_assert!(self.slots[id as usize].is_none());
                self.slots[id as usize] = Some(value);
                id
            }
            None => {
                self.slots.push(Some(value));
                (self.slots.len() - 1) as u32
            }
        }
    }

    pub fn remove(&mut self, id: u32) -> T {
        let value = self.slots[id as usize]
            .take()
            .unwrap_or_else(|| panic!("slab slot {id} already free"));
        self.free.push(id);
        self.live -= 1;
        value
    }

    #[inline]
    pub fn get(&self, id: u32) -> &T {
        self.slots[id as usize]
            .as_ref()
            .unwrap_or_else(|| panic!("slab slot {id} is free"))
    }

    #[inline]
    pub fn get_mut(&mut self, id: u32) -> &mut T {
        self.slots[id as usize]
            .as_mut()
            .unwrap_or_else(|| panic!("slab slot {id} is free"))
    }

    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        self.slots.get(id as usize).is_some_and(Option::is_some)
    }

    pub fn len(&self) -> usize {
        self.live
    }

    /// One past the largest id ever handed out.
    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &T)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|v| (i as u32, v)))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (u32, &mut T)> {
        self.slots
            .iter_mut()
            .enumerate()
            .filter_map(|(i, s)| s.as_mut().map(|v| (i as u32, v)))
    }

    /// Renumbers live entries densely in id order. Returns the old→new map
    /// (`u32::MAX` for free slots).
    pub fn compact(&mut self) -> Vec<u32> {
        let mut remap = vec![u32::MAX; self.slots.len()];
        let mut slots = Vec::with_capacity(self.live);
        for (old, slot) in self.slots.drain(..).enumerate() {
            if let Some(v) = slot {
                remap[old] = slots.len() as u32;
                slots.push(Some(v));
            }
        }
        self.slots = slots;
        self.free.clear();
        remap
    }

    pub fn from_values(values: Vec<T>) -> Self {
        let live = values.len();
        Slab {
            slots: values.into_iter().map(Some).collect(),
            free: Vec::new(),
            live,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reuses_slots_and_compacts() {
        let mut s = Slab::default();
        let a = s.insert('a');
        let b = s.insert('b');
        let c = s.insert('c');
        assert_eq!(s.remove(b), 'b');
        assert!(!s.contains(b));
        let d = s.insert('d');
        assert_eq!(d, b);
        s.remove(a);
        let remap = s.compact();
        assert_eq!(remap, vec![u32::MAX, 0, 1]);
        assert_eq!(s.iter().map(|(_, v)| *v).collect::<Vec<_>>(), vec!['d', 'c']);
        assert_eq!(s.len(), 2);
        assert_eq!(*s.get(remap[c as usize]), 'c');
    }
}
