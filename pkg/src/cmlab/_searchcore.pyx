# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled twin of the pure-Python search engine.

Same branch order, same propagation, same monitors; node counts and emitted
leaves are byte-identical with cmlab._searchpy by construction, and tests
compare the two directly.  Keep the two files in sync when changing either.
"""

import time as _time

from cpython cimport array
import array

cdef int POW3_0 = 1, POW3_1 = 3, POW3_2 = 9

cdef int _T1 = 0
cdef int _TENTRY = 1
cdef int _UENTRY = 2

# _dfs / helper return codes
cdef int _STOP = 1
cdef int _GO = 0
cdef int _ABORT = 2


cdef array.array _int_template = array.array('i', [])


cdef array.array _ints(values):
    cdef array.array out = array.clone(_int_template, len(values), zero=False)
    cdef Py_ssize_t i
    for i in range(len(values)):
        out.data.as_ints[i] = values[i]
    return out


cdef array.array _zeros(Py_ssize_t size):
    return array.clone(_int_template, size, zero=True)


cdef class Engine:
    cdef int k, n, n_ctx, n_pos, start_pos
    cdef int disc, trail_len
    cdef long long nodes, max_nodes
    cdef double deadline
    cdef bint has_rc, has_repeat, use_c1, use_rules
    cdef bint relabel, find_all, frontier, unfinished
    cdef int ctx_mode, compat_mode, frontier_pos
    cdef int[::1] T, U
    cdef int[::1] pos_kind, pos_state, pos_obs
    cdef int[::1] ctx_members, ctx_parity
    cdef int[::1] compat_flat, compat_off
    cdef int[::1] rowcol_flat, rowcol_off
    cdef int[::1] t1_flat
    cdef int n_t1
    cdef int[::1] rc_flat
    cdef int n_rc
    cdef int[::1] ctx_obsmask, compat_obsmask
    cdef int[::1] prod27
    cdef long long[::1] depth_nodes
    cdef int[::1] ctx_visited, ctx_queue
    cdef int ctx_stamp
    cdef int[::1] st_visited, st_queue
    cdef int st_stamp
    cdef int[::1] trail_kind, trail_idx, trail_prev
    cdef list leaves, snapshots

    def __init__(self, cfg, snapshot=None):
        cdef int k = cfg["k"]
        cdef int n = cfg["n"]
        self.k = k
        self.n = n
        self.ctx_members = _ints([m for ms in cfg["ctx_members"] for m in ms])
        self.ctx_parity = _ints(cfg["ctx_parity"])
        self.n_ctx = len(cfg["ctx_parity"])
        flat, off = [], [0]
        for row in cfg["compat"]:
            flat.extend(row)
            off.append(len(flat))
        self.compat_flat = _ints(flat)
        self.compat_off = _ints(off)
        flat, off = [], [0]
        for row in cfg["rowcol"]:
            flat.extend(row)
            off.append(len(flat))
        self.rowcol_flat = _ints(flat)
        self.rowcol_off = _ints(off)
        self.t1_flat = _ints([v for t in cfg["t1_candidates"] for v in t])
        self.n_t1 = len(cfg["t1_candidates"])
        self.has_rc = cfg["has_rc"]
        self.has_repeat = cfg["has_repeat"]
        self.ctx_mode = cfg["ctx_mode"]
        self.compat_mode = cfg["compat_mode"]
        self.use_c1 = cfg["use_c1"]
        self.use_rules = cfg["use_rules"]
        self.relabel = cfg["relabel"]
        self.find_all = cfg["find_all"]
        self.max_nodes = cfg["max_nodes"]
        self.deadline = cfg["deadline"]
        self.frontier = cfg.get("frontier", False)
        self.frontier_pos = cfg.get("frontier_pos", -1)

        pos = [(_T1, 0, 0)]
        for i in range(k):
            pos.extend((_UENTRY, i, o) for o in range(n))
            if i + 1 < k:
                pos.extend((_TENTRY, i + 1, o) for o in range(n))
        self.n_pos = len(pos)
        self.pos_kind = _ints([p[0] for p in pos])
        self.pos_state = _ints([p[1] for p in pos])
        self.pos_obs = _ints([p[2] for p in pos])

        self.T = _zeros(k * n)
        self.U = _zeros(k * n)
        self.disc = 1
        self.start_pos = 0
        cdef Py_ssize_t j
        if snapshot is not None:
            st, su, sd, sp = snapshot
            for j in range(k * n):
                self.T[j] = st[j]
                self.U[j] = su[j]
            self.disc = sd
            self.start_pos = sp

        runs = []
        if self.has_rc:
            for c in range(self.n_ctx):
                m = sorted(cfg["ctx_members"][c])
                perms = sorted(
                    (x, y, z)
                    for x in m for y in m for z in m
                    if len({x, y, z}) == 3
                )
                mask = 0
                for o in m:
                    mask |= 1 << o
                for p in perms:
                    runs.extend((p[0], p[1], p[2], cfg["ctx_parity"][c], mask))
        self.rc_flat = _ints(runs)
        self.n_rc = len(runs) // 5

        # observable bitmasks used to scope replay to affected monitors
        obsmask = []
        for c in range(self.n_ctx):
            mask = 0
            for o in cfg["ctx_members"][c]:
                mask |= 1 << o
            obsmask.append(mask)
        self.ctx_obsmask = _ints(obsmask)
        obsmask = []
        for y in range(n):
            mask = 0
            for o in cfg["compat"][y]:
                mask |= 1 << o
            obsmask.append(mask)
        self.compat_obsmask = _ints(obsmask)

        prod = [0] * 27
        for rec in range(27):
            d = (rec % 3, (rec // 3) % 3, rec // 9)
            if 0 not in d:
                p = 1
                for t in d:
                    p *= 1 if t == 1 else -1
                prod[rec] = p
        self.prod27 = _ints(prod)

        self.ctx_visited = _zeros(k * 27)
        self.ctx_queue = _zeros(k * 27)
        self.ctx_stamp = 0
        self.st_visited = _zeros(k)
        self.st_queue = _zeros(k)
        self.st_stamp = 0

        self.trail_kind = _zeros(2 * k * n + 8)
        self.trail_idx = _zeros(2 * k * n + 8)
        self.trail_prev = _zeros(2 * k * n + 8)
        self.trail_len = 0
        self.nodes = 0
        self.depth_nodes = array.clone(array.array('q', []), self.n_pos, zero=True)
        self.leaves = []
        self.snapshots = []
        self.unfinished = False

    # --- assignment and backtracking -----------------------------------------

    cdef inline void _set_t(self, int idx, int v):
        self.T[idx] = v
        self.trail_kind[self.trail_len] = 0
        self.trail_idx[self.trail_len] = idx
        self.trail_prev[self.trail_len] = 0
        self.trail_len += 1

    cdef inline void _set_u(self, int idx, int v):
        self.U[idx] = v
        self.trail_kind[self.trail_len] = 1
        self.trail_idx[self.trail_len] = idx
        self.trail_prev[self.trail_len] = self.disc
        self.trail_len += 1
        if self.relabel and v == self.disc + 1:
            self.disc += 1

    cdef inline void _undo(self, int mark):
        cdef int idx
        while self.trail_len > mark:
            self.trail_len -= 1
            idx = self.trail_idx[self.trail_len]
            if self.trail_kind[self.trail_len] == 0:
                self.T[idx] = 0
            else:
                self.U[idx] = 0
                self.disc = self.trail_prev[self.trail_len]

    # --- propagation ----------------------------------------------------------

    cdef int _c1_column(self, int o):
        cdef int k = self.k, n = self.n
        cdef int changed = 1
        cdef int i, j, a, b
        while changed:
            changed = 0
            for i in range(k):
                j = self.U[i * n + o]
                if j == 0:
                    continue
                a = self.T[i * n + o]
                b = self.T[(j - 1) * n + o]
                if a != 0 and b != 0:
                    if a != b:
                        return 0
                elif a != 0:
                    self._set_t((j - 1) * n + o, a)
                    changed = 1
                elif b != 0:
                    self._set_t(i * n + o, b)
                    changed = 1
        return 1

    cdef int _rule3(self):
        cdef int k = self.k, n = self.n
        cdef int out = 0
        cdef int o, i, j, v, u, x, xi, unique, full
        for o in range(n):
            full = 1
            for i in range(k):
                if self.T[i * n + o] == 0:
                    full = 0
                    break
            if not full:
                continue
            for i in range(k):
                v = self.T[i * n + o]
                unique = 1
                for j in range(k):
                    if j != i and self.T[j * n + o] == v:
                        unique = 0
                        break
                if not unique:
                    continue
                for xi in range(self.rowcol_off[o], self.rowcol_off[o + 1]):
                    x = self.rowcol_flat[xi]
                    u = self.U[i * n + x]
                    if u == 0:
                        self._set_u(i * n + x, i + 1)
                        out = 1
                    elif u != i + 1:
                        return -1
        return out

    cdef int _table_contradicts(self, int i, int c):
        cdef int n = self.n
        cdef int prod = 1
        cdef int mi, v
        for mi in range(3):
            v = self.T[i * n + self.ctx_members[c * 3 + mi]]
            if v == 0:
                return -1
            prod *= v
        return 1 if prod != self.ctx_parity[c] else 0

    cdef int _rule4(self):
        cdef int k = self.k, n = self.n
        cdef int i, c, mi, stays
        for i in range(k):
            for c in range(self.n_ctx):
                if self._table_contradicts(i, c) != 1:
                    continue
                stays = 0
                for mi in range(3):
                    if self.U[i * n + self.ctx_members[c * 3 + mi]] == i + 1:
                        stays += 1
                if stays >= 2:
                    return 0
        return 1

    cdef int _rule5(self):
        cdef int k = self.k, n = self.n
        cdef int i, c, mi, u, m, undecided, j, x, y, diff, ok, any_unknown
        cdef int t1, t2, t3
        cdef int targets[16]
        cdef int n_targets
        cdef int good[16]
        cdef int n_good
        for i in range(k):
            for c in range(self.n_ctx):
                if self._table_contradicts(i, c) != 1:
                    continue
                n_targets = 0
                undecided = 0
                for mi in range(3):
                    m = self.ctx_members[c * 3 + mi]
                    u = self.U[i * n + m]
                    if u == 0:
                        undecided += 1
                    elif u != i + 1:
                        ok = 0
                        for j in range(n_targets):
                            if targets[j] == u:
                                ok = 1
                                break
                        if not ok:
                            targets[n_targets] = u
                            n_targets += 1
                if n_targets + undecided < 2:
                    return 0
                any_unknown = 0
                n_good = 0
                for j in range(k):
                    x = self._table_contradicts(j, c)
                    if x == -1:
                        any_unknown = 1
                        break
                    if x == 0:
                        good[n_good] = j
                        n_good += 1
                if any_unknown:
                    continue
                ok = 0
                for x in range(n_good):
                    for y in range(x + 1, n_good):
                        diff = 0
                        for mi in range(3):
                            m = self.ctx_members[c * 3 + mi]
                            if self.T[good[x] * n + m] != self.T[good[y] * n + m]:
                                diff += 1
                        if diff >= 2:
                            ok = 1
                if not ok:
                    return 0
        return 1

    cdef int _propagate(self):
        cdef int o, r
        if self.use_c1:
            for o in range(self.n):
                if not self._c1_column(o):
                    return 0
        if self.use_rules:
            while True:
                r = self._rule3()
                if r < 0:
                    return 0
                if r == 0:
                    break
                if self.use_c1:
                    for o in range(self.n):
                        if not self._c1_column(o):
                            return 0
            if not self._rule4():
                return 0
            if not self._rule5():
                return 0
        return 1

    # --- replay monitors --------------------------------------------------------

    cdef int _replay_rc(self, int affected):
        cdef int n = self.n
        cdef int r, s, v1, v2, v3, u
        for r in range(self.n_rc):
            if not self.rc_flat[r * 5 + 4] & affected:
                continue
            s = 0
            v1 = self.T[s * n + self.rc_flat[r * 5]]
            if v1 == 0:
                continue
            u = self.U[s * n + self.rc_flat[r * 5]]
            if u == 0:
                continue
            s = u - 1
            v2 = self.T[s * n + self.rc_flat[r * 5 + 1]]
            if v2 == 0:
                continue
            u = self.U[s * n + self.rc_flat[r * 5 + 1]]
            if u == 0:
                continue
            s = u - 1
            v3 = self.T[s * n + self.rc_flat[r * 5 + 2]]
            if v3 == 0:
                continue
            if v1 * v2 * v3 != self.rc_flat[r * 5 + 3]:
                return 0
        return 1

    cdef int _replay_repeat(self, int affected):
        cdef int n = self.n
        cdef int y, v, u, w
        for y in range(n):
            if not (affected >> y) & 1:
                continue
            v = self.T[y]
            if v == 0:
                continue
            u = self.U[y]
            if u == 0:
                continue
            w = self.T[(u - 1) * n + y]
            if w != 0 and w != v:
                return 0
        return 1

    cdef int _replay_context_from(self, int s0, int affected):
        cdef int n = self.n
        cdef int c, parity, stamp, root, head, tail, node, s, rec
        cdef int mi, obs, v, trit, d, nrec, p, u, nn, pw
        for c in range(self.n_ctx):
            if not self.ctx_obsmask[c] & affected:
                continue
            parity = self.ctx_parity[c]
            self.ctx_stamp += 1
            stamp = self.ctx_stamp
            root = s0 * 27
            self.ctx_visited[root] = stamp
            self.ctx_queue[0] = root
            head = 0
            tail = 1
            while head < tail:
                node = self.ctx_queue[head]
                head += 1
                s = node // 27
                rec = node % 27
                for mi in range(3):
                    obs = self.ctx_members[c * 3 + mi]
                    v = self.T[s * n + obs]
                    if v == 0:
                        continue
                    trit = 1 if v == 1 else 2
                    pw = POW3_0 if mi == 0 else (POW3_1 if mi == 1 else POW3_2)
                    d = (rec // pw) % 3
                    if d == 0:
                        nrec = rec + trit * pw
                        p = self.prod27[nrec]
                        if p != 0 and p != parity:
                            return 0
                    elif d != trit:
                        return 0
                    else:
                        nrec = rec
                    u = self.U[s * n + obs]
                    if u != 0:
                        nn = (u - 1) * 27 + nrec
                        if self.ctx_visited[nn] != stamp:
                            self.ctx_visited[nn] = stamp
                            self.ctx_queue[tail] = nn
                            tail += 1
        return 1

    cdef int _replay_compat_from(self, int s0, int affected):
        cdef int n = self.n
        cdef int y, v, u0, stamp, head, tail, s, w, xi, x, u
        for y in range(n):
            if not self.compat_obsmask[y] & affected:
                continue
            v = self.T[s0 * n + y]
            if v == 0:
                continue
            u0 = self.U[s0 * n + y]
            if u0 == 0:
                continue
            self.st_stamp += 1
            stamp = self.st_stamp
            self.st_visited[u0 - 1] = stamp
            self.st_queue[0] = u0 - 1
            head = 0
            tail = 1
            while head < tail:
                s = self.st_queue[head]
                head += 1
                w = self.T[s * n + y]
                if w != 0 and w != v:
                    return 0
                for xi in range(self.compat_off[y], self.compat_off[y + 1]):
                    x = self.compat_flat[xi]
                    u = self.U[s * n + x]
                    if u != 0 and self.st_visited[u - 1] != stamp:
                        self.st_visited[u - 1] = stamp
                        self.st_queue[tail] = u - 1
                        tail += 1
        return 1

    cdef int _replay(self, int affected):
        cdef int s0
        if self.has_rc and not self._replay_rc(affected):
            return 0
        if self.has_repeat and not self._replay_repeat(affected):
            return 0
        if self.ctx_mode == 1:
            if not self._replay_context_from(0, affected):
                return 0
        elif self.ctx_mode == 2:
            for s0 in range(self.k):
                if not self._replay_context_from(s0, affected):
                    return 0
        if self.compat_mode == 1:
            if not self._replay_compat_from(0, affected):
                return 0
        elif self.compat_mode == 2:
            for s0 in range(self.k):
                if not self._replay_compat_from(s0, affected):
                    return 0
        return 1

    cdef int _consistent(self, int mark):
        # replay only monitors whose observables gained entries; untouched
        # monitors passed at the previous node and cannot newly fail
        cdef int affected = 0
        cdef int t
        if not self._propagate():
            return 0
        for t in range(mark, self.trail_len):
            affected |= 1 << (self.trail_idx[t] % self.n)
        return self._replay(affected)

    # --- search -------------------------------------------------------------

    cdef int _bump(self, int pos):
        self.nodes += 1
        self.depth_nodes[pos] += 1
        if self.max_nodes and self.nodes > self.max_nodes:
            return _ABORT
        if self.deadline and self.nodes % 1024 == 0 and _time.time() > self.deadline:
            return _ABORT
        return _GO

    cdef int _all_reachable(self):
        cdef int n = self.n
        cdef int seen = 1
        cdef int stack[64]
        cdef int top = 1
        cdef int s, o, t
        stack[0] = 0
        while top:
            top -= 1
            s = stack[top]
            for o in range(n):
                t = self.U[s * n + o] - 1
                if not (seen >> t) & 1:
                    seen |= 1 << t
                    stack[top] = t
                    top += 1
        return seen == (1 << self.k) - 1

    cdef int _dfs(self, int pos):
        cdef int kind, st, obs, mark, v, idx, vmax, r, ci, o
        if pos == self.n_pos:
            if not self.relabel and not self._all_reachable():
                return _GO
            self.leaves.append((
                tuple([self.T[o] for o in range(self.k * self.n)]),
                tuple([self.U[o] for o in range(self.k * self.n)]),
            ))
            return _GO if self.find_all else _STOP
        if self.frontier and pos == self.frontier_pos:
            self.snapshots.append((
                tuple([self.T[o] for o in range(self.k * self.n)]),
                tuple([self.U[o] for o in range(self.k * self.n)]),
                self.disc,
                pos,
                self.nodes,
            ))
            return _GO
        kind = self.pos_kind[pos]
        st = self.pos_state[pos]
        obs = self.pos_obs[pos]
        if kind == _TENTRY and obs == 0 and self.relabel and self.disc < st + 1:
            return _GO

        if kind == _T1:
            for ci in range(self.n_t1):
                r = self._bump(pos)
                if r == _ABORT:
                    return _ABORT
                mark = self.trail_len
                for o in range(self.n):
                    self._set_t(o, self.t1_flat[ci * self.n + o])
                if self._consistent(mark):
                    r = self._dfs(pos + 1)
                    if r != _GO:
                        return r
                self._undo(mark)
            return _GO

        idx = st * self.n + obs
        if kind == _TENTRY:
            if self.T[idx] != 0:
                return self._dfs(pos + 1)
            for v in (1, -1):
                r = self._bump(pos)
                if r == _ABORT:
                    return _ABORT
                mark = self.trail_len
                self._set_t(idx, v)
                if self._consistent(mark):
                    r = self._dfs(pos + 1)
                    if r != _GO:
                        return r
                self._undo(mark)
            return _GO

        if self.U[idx] != 0:
            return self._dfs(pos + 1)
        vmax = min(self.disc + 1, self.k) if self.relabel else self.k
        for v in range(1, vmax + 1):
            r = self._bump(pos)
            if r == _ABORT:
                return _ABORT
            mark = self.trail_len
            self._set_u(idx, v)
            if self._consistent(mark):
                r = self._dfs(pos + 1)
                if r != _GO:
                    return r
            self._undo(mark)
        return _GO

    def run(self):
        if self._dfs(self.start_pos) == _ABORT:
            self.unfinished = True

    def load_snapshot(self, snapshot):
        cdef Py_ssize_t j
        st, su, sd, sp = snapshot
        for j in range(self.k * self.n):
            self.T[j] = st[j]
            self.U[j] = su[j]
        self.disc = sd
        self.start_pos = sp
        self.trail_len = 0
        self.nodes = 0
        self.leaves = []
        self.unfinished = False

    def results(self):
        return self.unfinished, self.leaves, self.nodes, self.snapshots

    def load_tables(self, T, U):
        cdef Py_ssize_t j
        for j in range(self.k * self.n):
            self.T[j] = T[j]
            self.U[j] = U[j]

    def propagate_only(self):
        return bool(self._propagate())

    def tables(self):
        return (
            tuple([self.T[o] for o in range(self.k * self.n)]),
            tuple([self.U[o] for o in range(self.k * self.n)]),
        )


def run_search(cfg, snapshot=None):
    """Returns (unfinished, leaves, nodes, snapshots)."""
    eng = Engine(cfg, snapshot)
    eng.run()
    return eng.results()


def run_batch(cfg, snapshots):
    """Resume one engine from each snapshot in turn.

    Returns a list of per-snapshot (unfinished, leaves, nodes) triples.  In
    find-first mode the batch stops at the first snapshot that either hits a
    leaf or aborts on budget, mirroring how the driver consumes results.
    """
    cdef Engine eng = Engine(cfg)
    out = []
    for snap in snapshots:
        eng.load_snapshot(snap)
        eng.run()
        out.append((eng.unfinished, eng.leaves, eng.nodes))
        if not cfg["find_all"] and (eng.unfinished or eng.leaves):
            break
    return out


def run_stats(cfg, snapshot=None):
    """Like run_search, but also returns per-position node counts."""
    cdef Engine eng = Engine(cfg, snapshot)
    eng.run()
    unf, leaves, nodes, snaps = eng.results()
    return unf, leaves, nodes, snaps, list(eng.depth_nodes)


def probe_propagate(cfg, T, U):
    """Debug hook: run propagation only on given partial tables."""
    eng = Engine(cfg)
    eng.load_tables(T, U)
    ok = eng.propagate_only()
    t, u = eng.tables()
    return ok, t, u
