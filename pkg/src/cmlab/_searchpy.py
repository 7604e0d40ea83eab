"""Pure-Python backtracking engine for the table search.

This module and the compiled twin implement the identical algorithm: a
depth-first scan over table entries in a fixed position order with
constraint propagation and monitor replay after every assignment.  Node
counts, visit order, and emitted leaves are specified to be byte-identical
between the twins; tests compare them directly.

Scan order: the whole first value table in one branch (over the precomputed
canonical candidates), then per state its update row followed by the next
state's value row.  Update targets are numbered by first appearance, so each
relabeling orbit with a fixed initial state is enumerated exactly once.

Everything here works on flat integer lists; the facade in ``search``
prepares the configuration and interprets the results.
"""

from __future__ import annotations

import time

POW3 = (1, 3, 9)

# position kinds
_T1 = 0
_TENTRY = 1
_UENTRY = 2


class _Abort(Exception):
    pass


def _positions(k: int, n: int):
    """(kind, state0, obs) triples in scan order."""
    pos = [(_T1, 0, 0)]
    for i in range(k):
        pos.extend((_UENTRY, i, o) for o in range(n))
        if i + 1 < k:
            pos.extend((_TENTRY, i + 1, o) for o in range(n))
    return pos


class Engine:
    def __init__(self, cfg, snapshot=None):
        self.k = cfg["k"]
        self.n = cfg["n"]
        self.ctx_members = cfg["ctx_members"]
        self.ctx_parity = cfg["ctx_parity"]
        self.n_ctx = len(self.ctx_parity)
        self.compat = cfg["compat"]
        self.rowcol = cfg["rowcol"]
        self.t1_candidates = cfg["t1_candidates"]
        self.has_rc = cfg["has_rc"]
        self.has_repeat = cfg["has_repeat"]
        self.ctx_mode = cfg["ctx_mode"]  # 0 none, 1 initial only, 2 all starts
        self.compat_mode = cfg["compat_mode"]
        self.use_c1 = cfg["use_c1"]
        self.use_rules = cfg["use_rules"]
        self.relabel = cfg["relabel"]
        self.find_all = cfg["find_all"]
        self.max_nodes = cfg["max_nodes"]
        self.deadline = cfg["deadline"]
        self.frontier = cfg.get("frontier", False)
        self.frontier_pos = cfg.get("frontier_pos", -1)

        k, n = self.k, self.n
        self.positions = _positions(k, n)
        self.n_pos = len(self.positions)

        self.T = [0] * (k * n)
        self.U = [0] * (k * n)
        self.disc = 1
        self.start_pos = 0
        if snapshot is not None:
            st, su, sd, sp = snapshot
            self.T[:] = st
            self.U[:] = su
            self.disc = sd
            self.start_pos = sp

        if self.has_rc:
            self.rc_runs = []
            for c in range(self.n_ctx):
                m = sorted(self.ctx_members[c])
                perms = sorted(
                    (x, y, z)
                    for x in m for y in m for z in m
                    if len({x, y, z}) == 3
                )
                mask = 0
                for o in m:
                    mask |= 1 << o
                for p in perms:
                    self.rc_runs.append((p[0], p[1], p[2], self.ctx_parity[c], mask))

        # observable bitmasks used to scope replay to affected monitors
        self.ctx_obsmask = []
        for c in range(self.n_ctx):
            mask = 0
            for o in self.ctx_members[c]:
                mask |= 1 << o
            self.ctx_obsmask.append(mask)
        self.compat_obsmask = []
        for y in range(n):
            mask = 0
            for o in self.compat[y]:
                mask |= 1 << o
            self.compat_obsmask.append(mask)

        # per-record-code digit product, valid when all three digits are set
        self.prod27 = [0] * 27
        for rec in range(27):
            d = (rec % 3, (rec // 3) % 3, rec // 9)
            if 0 not in d:
                p = 1
                for t in d:
                    p *= 1 if t == 1 else -1
                self.prod27[rec] = p

        self.ctx_visited = [0] * (k * 27)
        self.ctx_queue = [0] * (k * 27)
        self.ctx_stamp = 0
        self.st_visited = [0] * k
        self.st_queue = [0] * k
        self.st_stamp = 0

        self.trail = []
        self.nodes = 0
        self.depth_nodes = [0] * self.n_pos
        self.leaves = []
        self.snapshots = []
        self.unfinished = False

    # --- assignment and backtracking -----------------------------------------

    def _set_t(self, idx, v):
        self.T[idx] = v
        self.trail.append((0, idx, 0))

    def _set_u(self, idx, v):
        self.U[idx] = v
        self.trail.append((1, idx, self.disc))
        if self.relabel and v == self.disc + 1:
            self.disc += 1

    def _undo(self, mark):
        while len(self.trail) > mark:
            kind, idx, prev = self.trail.pop()
            if kind == 0:
                self.T[idx] = 0
            else:
                self.U[idx] = 0
                self.disc = prev

    # --- propagation ----------------------------------------------------------

    def _c1_column(self, o):
        k, n, T, U = self.k, self.n, self.T, self.U
        changed = True
        while changed:
            changed = False
            for i in range(k):
                j = U[i * n + o]
                if j == 0:
                    continue
                a = T[i * n + o]
                b = T[(j - 1) * n + o]
                if a and b:
                    if a != b:
                        return False
                elif a:
                    self._set_t((j - 1) * n + o, a)
                    changed = True
                elif b:
                    self._set_t(i * n + o, b)
                    changed = True
        return True

    def _rule3(self):
        """Returns -1 refuted, 1 forced something, 0 quiet."""
        k, n, T, U = self.k, self.n, self.T, self.U
        out = 0
        for o in range(n):
            col = [T[i * n + o] for i in range(k)]
            if 0 in col:
                continue
            for i in range(k):
                v = col[i]
                if any(col[j] == v for j in range(k) if j != i):
                    continue
                for x in self.rowcol[o]:
                    u = U[i * n + x]
                    if u == 0:
                        self._set_u(i * n + x, i + 1)
                        out = 1
                    elif u != i + 1:
                        return -1
        return out

    def _table_contradicts(self, i, c):
        """1 contradicted, 0 satisfied, -1 not yet decided."""
        n, T = self.n, self.T
        prod = 1
        for m in self.ctx_members[c]:
            v = T[i * n + m]
            if v == 0:
                return -1
            prod *= v
        return 1 if prod != self.ctx_parity[c] else 0

    def _rule4(self):
        k, n, U = self.k, self.n, self.U
        for i in range(k):
            for c in range(self.n_ctx):
                if self._table_contradicts(i, c) != 1:
                    continue
                stays = sum(1 for m in self.ctx_members[c] if U[i * n + m] == i + 1)
                if stays >= 2:
                    return False
        return True

    def _rule5(self):
        k, n, T, U = self.k, self.n, self.T, self.U
        for i in range(k):
            for c in range(self.n_ctx):
                if self._table_contradicts(i, c) != 1:
                    continue
                members = self.ctx_members[c]
                targets = set()
                undecided = 0
                for m in members:
                    u = U[i * n + m]
                    if u == 0:
                        undecided += 1
                    elif u != i + 1:
                        targets.add(u)
                if len(targets) + undecided < 2:
                    return False
                marks = [self._table_contradicts(j, c) for j in range(k)]
                if -1 in marks:
                    continue
                good = [j for j in range(k) if marks[j] == 0]
                ok = False
                for x in range(len(good)):
                    for y in range(x + 1, len(good)):
                        diff = sum(
                            1
                            for m in members
                            if T[good[x] * n + m] != T[good[y] * n + m]
                        )
                        if diff >= 2:
                            ok = True
                if not ok:
                    return False
        return True

    def _propagate(self):
        if self.use_c1:
            for o in range(self.n):
                if not self._c1_column(o):
                    return False
        if self.use_rules:
            while True:
                r = self._rule3()
                if r < 0:
                    return False
                if r == 0:
                    break
                if self.use_c1:
                    for o in range(self.n):
                        if not self._c1_column(o):
                            return False
            if not self._rule4():
                return False
            if not self._rule5():
                return False
        return True

    # --- replay monitors --------------------------------------------------------

    def _replay_rc(self, affected):
        n, T, U = self.n, self.T, self.U
        for m1, m2, m3, parity, mask in self.rc_runs:
            if not mask & affected:
                continue
            s = 0
            v1 = T[s * n + m1]
            if v1 == 0:
                continue
            u = U[s * n + m1]
            if u == 0:
                continue
            s = u - 1
            v2 = T[s * n + m2]
            if v2 == 0:
                continue
            u = U[s * n + m2]
            if u == 0:
                continue
            s = u - 1
            v3 = T[s * n + m3]
            if v3 == 0:
                continue
            if v1 * v2 * v3 != parity:
                return False
        return True

    def _replay_repeat(self, affected):
        n, T, U = self.n, self.T, self.U
        for y in range(n):
            if not (affected >> y) & 1:
                continue
            v = T[y]
            if v == 0:
                continue
            u = U[y]
            if u == 0:
                continue
            w = T[(u - 1) * n + y]
            if w and w != v:
                return False
        return True

    def _replay_context_from(self, s0, affected):
        n, T, U = self.n, self.T, self.U
        visited, queue, prod27 = self.ctx_visited, self.ctx_queue, self.prod27
        for c in range(self.n_ctx):
            if not self.ctx_obsmask[c] & affected:
                continue
            members = self.ctx_members[c]
            parity = self.ctx_parity[c]
            self.ctx_stamp += 1
            stamp = self.ctx_stamp
            root = s0 * 27
            visited[root] = stamp
            queue[0] = root
            head, tail = 0, 1
            while head < tail:
                node = queue[head]
                head += 1
                s, rec = divmod(node, 27)
                for mi in range(3):
                    obs = members[mi]
                    v = T[s * n + obs]
                    if v == 0:
                        continue
                    trit = 1 if v == 1 else 2
                    d = (rec // POW3[mi]) % 3
                    if d == 0:
                        nrec = rec + trit * POW3[mi]
                        p = prod27[nrec]
                        if p and p != parity:
                            return False
                    elif d != trit:
                        return False
                    else:
                        nrec = rec
                    u = U[s * n + obs]
                    if u:
                        nn = (u - 1) * 27 + nrec
                        if visited[nn] != stamp:
                            visited[nn] = stamp
                            queue[tail] = nn
                            tail += 1
        return True

    def _replay_compat_from(self, s0, affected):
        n, T, U = self.n, self.T, self.U
        visited, queue = self.st_visited, self.st_queue
        for y in range(n):
            if not self.compat_obsmask[y] & affected:
                continue
            v = T[s0 * n + y]
            if v == 0:
                continue
            u0 = U[s0 * n + y]
            if u0 == 0:
                continue
            self.st_stamp += 1
            stamp = self.st_stamp
            visited[u0 - 1] = stamp
            queue[0] = u0 - 1
            head, tail = 0, 1
            alphabet = self.compat[y]
            while head < tail:
                s = queue[head]
                head += 1
                w = T[s * n + y]
                if w and w != v:
                    return False
                for x in alphabet:
                    u = U[s * n + x]
                    if u and visited[u - 1] != stamp:
                        visited[u - 1] = stamp
                        queue[tail] = u - 1
                        tail += 1
        return True

    def _replay(self, affected):
        if self.has_rc and not self._replay_rc(affected):
            return False
        if self.has_repeat and not self._replay_repeat(affected):
            return False
        if self.ctx_mode == 1:
            if not self._replay_context_from(0, affected):
                return False
        elif self.ctx_mode == 2:
            for s0 in range(self.k):
                if not self._replay_context_from(s0, affected):
                    return False
        if self.compat_mode == 1:
            if not self._replay_compat_from(0, affected):
                return False
        elif self.compat_mode == 2:
            for s0 in range(self.k):
                if not self._replay_compat_from(s0, affected):
                    return False
        return True

    def _consistent(self, mark):
        """Propagate, then replay the monitors that can see the new entries.

        A monitor only inspects table entries for its own observables: context
        paths record members of one context, and a Y-sandwich monitor reads
        outputs for Y while following Comp(Y)-labeled moves.  Monitors whose
        observables were untouched since the last replay passed before and
        still pass, so only the affected ones need re-running.
        """
        if not self._propagate():
            return False
        affected = 0
        for _, idx, _prev in self.trail[mark:]:
            affected |= 1 << (idx % self.n)
        return self._replay(affected)

    # --- search -------------------------------------------------------------

    def _bump(self, pos):
        self.nodes += 1
        self.depth_nodes[pos] += 1
        if self.max_nodes and self.nodes > self.max_nodes:
            raise _Abort()
        if self.deadline and self.nodes % 1024 == 0 and time.time() > self.deadline:
            raise _Abort()

    def _all_reachable(self):
        k, n, U = self.k, self.n, self.U
        seen = 1  # bitmask, state 1
        frontier = [0]
        while frontier:
            s = frontier.pop()
            for o in range(n):
                t = U[s * n + o] - 1
                if not (seen >> t) & 1:
                    seen |= 1 << t
                    frontier.append(t)
        return seen == (1 << k) - 1

    def _dfs(self, pos):
        """Returns True to stop the whole search (first hit found)."""
        if pos == self.n_pos:
            if not self.relabel and not self._all_reachable():
                return False
            self.leaves.append((tuple(self.T), tuple(self.U)))
            return not self.find_all
        if self.frontier and pos == self.frontier_pos:
            self.snapshots.append(
                (tuple(self.T), tuple(self.U), self.disc, pos, self.nodes)
            )
            return False
        kind, st, obs = self.positions[pos]
        if kind == _TENTRY and obs == 0 and self.relabel and self.disc < st + 1:
            return False

        if kind == _T1:
            for cand in self.t1_candidates:
                self._bump(pos)
                mark = len(self.trail)
                for o in range(self.n):
                    self._set_t(o, cand[o])
                if self._consistent(mark) and self._dfs(pos + 1):
                    return True
                self._undo(mark)
            return False

        n = self.n
        idx = st * n + obs
        if kind == _TENTRY:
            if self.T[idx] != 0:
                return self._dfs(pos + 1)
            for v in (1, -1):
                self._bump(pos)
                mark = len(self.trail)
                self._set_t(idx, v)
                if self._consistent(mark) and self._dfs(pos + 1):
                    return True
                self._undo(mark)
            return False

        if self.U[idx] != 0:
            return self._dfs(pos + 1)
        vmax = min(self.disc + 1, self.k) if self.relabel else self.k
        for v in range(1, vmax + 1):
            self._bump(pos)
            mark = len(self.trail)
            self._set_u(idx, v)
            if self._consistent(mark) and self._dfs(pos + 1):
                return True
            self._undo(mark)
        return False

    def run(self):
        try:
            self._dfs(self.start_pos)
        except _Abort:
            self.unfinished = True

    def load_snapshot(self, snapshot):
        st, su, sd, sp = snapshot
        self.T[:] = st
        self.U[:] = su
        self.disc = sd
        self.start_pos = sp
        self.trail.clear()
        self.nodes = 0
        self.leaves = []
        self.unfinished = False


def run_search(cfg, snapshot=None):
    """Returns (unfinished, leaves, nodes, snapshots)."""
    eng = Engine(cfg, snapshot)
    eng.run()
    return eng.unfinished, eng.leaves, eng.nodes, eng.snapshots


def run_batch(cfg, snapshots):
    """Resume one engine from each snapshot in turn.

    Returns a list of per-snapshot (unfinished, leaves, nodes) triples.  In
    find-first mode the batch stops at the first snapshot that either hits a
    leaf or aborts on budget, mirroring how the driver consumes results.
    """
    eng = Engine(cfg)
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
    eng = Engine(cfg, snapshot)
    eng.run()
    return eng.unfinished, eng.leaves, eng.nodes, eng.snapshots, list(eng.depth_nodes)


def probe_propagate(cfg, T, U):
    """Debug hook: run propagation only on given partial tables.

    Returns (ok, T', U') with narrowed copies; replay is not run.
    """
    eng = Engine(cfg)
    eng.T = list(T)
    eng.U = list(U)
    ok = eng._propagate()
    return ok, tuple(eng.T), tuple(eng.U)
