#include "moyal/diagrams.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "moyal/rng.hpp"

namespace moyal {
namespace diagrams {

const std::array<std::pair<int, int>, kNumFactors> kFactorIndices = {{
    {IM, IK},   // 1: z_{m k}
    {IK, IMB},  // 2: z_{k mb}
    {IMB, IKB}, // 3: z_{mb kb}
    {IKB, IM},  // 4: z_{kb m}
    {IN, ILB},  // 5: z_{n lb}
    {ILB, INB}, // 6: z_{lb nb}
    {INB, IL},  // 7: z_{nb l}
    {IL, IN},   // 8: z_{l n}
}};

std::string Pairing::to_string() const {
    std::ostringstream os;
    for (int i = 0; i < kNumFactors; ++i) {
        if (partner[i] > i) os << "(" << i + 1 << partner[i] + 1 << ")";
    }
    return os.str();
}

namespace {

void enumerate_rec(std::array<int, kNumFactors>& partner, unsigned used,
                   std::vector<Pairing>& out) {
    int first = -1;
    for (int i = 0; i < kNumFactors; ++i)
        if (!(used & (1u << i))) {
            first = i;
            break;
        }
    if (first < 0) {
        Pairing p;
        p.partner = partner;
        out.push_back(p);
        return;
    }
    for (int j = first + 1; j < kNumFactors; ++j) {
        if (used & (1u << j)) continue;
        partner[first] = j;
        partner[j] = first;
        enumerate_rec(partner, used | (1u << first) | (1u << j), out);
    }
}

struct UnionFind {
    std::array<int, kNumIndices> parent;
    UnionFind() { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

std::vector<Pairing> enumerate_pairings() {
    std::vector<Pairing> out;
    std::array<int, kNumFactors> partner{};
    enumerate_rec(partner, 0, out);
    return out;
}

DiagramGraph pairing_to_graph(const Pairing& p) {
    // contraction E[z_ab z_cd] = delta_ad delta_bc / A_ab merges a~d, b~c
    UnionFind uf;
    for (int i = 0; i < kNumFactors; ++i) {
        int j = p.partner[i];
        if (j < i) continue;
        auto [a, b] = kFactorIndices[i];
        auto [c, d] = kFactorIndices[j];
        uf.unite(a, d);
        uf.unite(b, c);
    }

    DiagramGraph g;
    std::array<int, kNumIndices> label;
    label.fill(-1);
    int next = 0;
    for (int i = 0; i < kNumIndices; ++i) {
        int r = uf.find(i);
        if (label[r] < 0) label[r] = next++;
        g.vertex_of[i] = label[r];
    }
    g.n_vertices = next;

    std::map<std::pair<int, int>, SymWeight> acc;
    auto add = [&](int a, int b, int k1, int ka, int kb) {
        int u = g.vertex_of[a], v = g.vertex_of[b];
        if (u > v) std::swap(u, v);
        SymWeight& sw = acc[{u, v}];
        sw.k1 += k1;
        sw.ka += ka;
        sw.kb += kb;
    };
    for (int i = 0; i < kNumFactors; ++i) {
        int j = p.partner[i];
        if (j < i) continue;
        auto [a, b] = kFactorIndices[i];
        add(a, b, 1, 0, 0); // propagator 1/A_ab
    }
    add(IK, IL, 0, 2, 0);   // 1/A_kl^{2 alpha}
    add(IKB, ILB, 0, 2, 0); // 1/A_kb,lb^{2 alpha}
    add(IM, IN, 0, 0, -2);  // A_mn^{2 beta} = 1/A_mn^{-2 beta}
    add(IMB, INB, 0, 0, -2);
    for (const auto& [key, wt] : acc) g.edges.emplace_back(key.first, key.second, wt);
    return g;
}

std::string DiagramGraph::to_string() const {
    std::ostringstream os;
    os << n_vertices << " vertices;";
    for (const auto& [u, v, wt] : edges) {
        os << " (" << u << "," << v << "):";
        bool first = true;
        auto emit = [&](int k, const char* sym) {
            if (k == 0) return;
            if (!first || k < 0) os << (k > 0 ? "+" : "");
            os << k << sym;
            first = false;
        };
        emit(wt.k1, "");
        emit(wt.ka, "a");
        emit(wt.kb, "b");
        if (first) os << "0";
    }
    return os.str();
}

namespace {

using CanonicalForm = std::vector<long long>;

CanonicalForm canonical_form(const DiagramGraph& g) {
    const int n = g.n_vertices;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    CanonicalForm best;
    do {
        std::vector<std::array<long long, 5>> rel;
        rel.reserve(g.edges.size());
        for (const auto& [u, v, wt] : g.edges) {
            long long a = perm[u], b = perm[v];
            if (a > b) std::swap(a, b);
            rel.push_back({a, b, wt.k1, wt.ka, wt.kb});
        }
        std::sort(rel.begin(), rel.end());
        CanonicalForm flat;
        flat.reserve(rel.size() * 5 + 1);
        flat.push_back(n);
        for (const auto& r : rel) flat.insert(flat.end(), r.begin(), r.end());
        if (best.empty() || flat < best) best = std::move(flat);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace

const std::vector<std::vector<std::string>>& reference_groupings() {
    static const std::vector<std::vector<std::string>> table = {
        {"(12)(34)(56)(78)"},
        {"(12)(34)(57)(68)", "(13)(24)(56)(78)"},
        {"(12)(34)(58)(67)"},
        {"(12)(35)(46)(78)", "(17)(28)(34)(56)"},
        {"(12)(35)(47)(68)", "(12)(36)(48)(57)", "(12)(37)(45)(68)", "(12)(38)(46)(57)",
         "(13)(25)(46)(78)", "(13)(26)(45)(78)", "(13)(27)(48)(56)", "(13)(28)(47)(56)",
         "(15)(24)(36)(78)", "(15)(27)(34)(68)", "(16)(24)(35)(78)", "(16)(28)(34)(57)",
         "(17)(24)(38)(56)", "(17)(25)(34)(68)", "(18)(24)(37)(56)", "(18)(26)(34)(57)"},
        {"(12)(35)(48)(67)", "(12)(37)(46)(58)", "(14)(26)(35)(78)", "(14)(28)(37)(56)",
         "(15)(23)(46)(78)", "(15)(28)(34)(67)", "(17)(23)(48)(56)", "(17)(26)(34)(58)"},
        {"(12)(36)(45)(78)", "(18)(27)(34)(56)"},
        {"(12)(36)(47)(58)", "(12)(38)(45)(67)", "(14)(25)(36)(78)", "(14)(27)(38)(56)",
         "(16)(23)(45)(78)", "(16)(27)(34)(58)", "(18)(23)(47)(56)", "(18)(25)(34)(67)"},
        {"(12)(37)(48)(56)", "(15)(26)(34)(78)"},
        {"(12)(38)(47)(56)", "(16)(25)(34)(78)"},
        {"(13)(24)(57)(68)"},
        {"(13)(24)(58)(67)", "(14)(23)(57)(68)"},
        {"(13)(25)(47)(68)"},
        {"(13)(25)(48)(67)", "(13)(26)(47)(58)", "(13)(27)(46)(58)", "(13)(28)(45)(67)",
         "(14)(25)(37)(68)", "(14)(26)(38)(57)", "(14)(27)(35)(68)", "(14)(28)(36)(57)",
         "(15)(23)(47)(68)", "(15)(24)(38)(67)", "(16)(23)(48)(57)", "(16)(24)(37)(58)",
         "(17)(23)(45)(68)", "(17)(24)(36)(58)", "(18)(23)(46)(57)", "(18)(24)(35)(67)"},
        {"(13)(26)(48)(57)", "(15)(24)(37)(68)"},
        {"(13)(27)(45)(68)", "(18)(24)(36)(57)"},
        {"(13)(28)(46)(57)", "(17)(24)(35)(68)"},
        {"(14)(23)(56)(78)"},
        {"(14)(23)(58)(67)"},
        {"(14)(25)(38)(67)", "(16)(23)(47)(58)"},
        {"(14)(26)(37)(58)", "(15)(23)(48)(67)"},
        {"(14)(27)(36)(58)", "(18)(23)(45)(67)"},
        {"(14)(28)(35)(67)", "(17)(23)(46)(58)"},
        {"(15)(26)(37)(48)", "(17)(28)(35)(46)"},
        {"(15)(26)(38)(47)", "(16)(25)(37)(48)"},
        {"(15)(27)(36)(48)", "(18)(26)(37)(45)"},
        {"(15)(27)(38)(46)", "(15)(28)(36)(47)", "(16)(27)(35)(48)", "(16)(28)(37)(45)",
         "(17)(25)(36)(48)", "(17)(26)(38)(45)", "(18)(25)(37)(46)", "(18)(26)(35)(47)"},
        {"(15)(28)(37)(46)", "(17)(26)(35)(48)"},
        {"(16)(24)(38)(57)"},
        {"(16)(25)(38)(47)"},
        {"(16)(27)(38)(45)", "(18)(25)(36)(47)"},
        {"(16)(28)(35)(47)", "(17)(25)(38)(46)"},
        {"(17)(28)(36)(45)", "(18)(27)(35)(46)"},
        {"(18)(27)(36)(45)"},
    };
    return table;
}

std::vector<DiagramClass> classify(const std::vector<Pairing>& pairings) {
    std::map<CanonicalForm, DiagramClass> groups;
    for (std::size_t i = 0; i < pairings.size(); ++i) {
        DiagramGraph g = pairing_to_graph(pairings[i]);
        CanonicalForm f = canonical_form(g);
        auto [it, fresh] = groups.try_emplace(f);
        if (fresh) it->second.representative = g;
        it->second.members.push_back(static_cast<int>(i));
    }
    std::vector<DiagramClass> out;
    out.reserve(groups.size());
    for (auto& [form, cls] : groups) out.push_back(std::move(cls));
    // order classes by their first member in enumeration order
    std::sort(out.begin(), out.end(),
              [](const DiagramClass& a, const DiagramClass& b) {
                  return a.members.front() < b.members.front();
              });
    const auto& ref = reference_groupings();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].id = static_cast<int>(i) + 1;
        std::set<std::string> names;
        for (int mi : out[i].members) names.insert(pairings[mi].to_string());
        for (std::size_t r = 0; r < ref.size(); ++r)
            if (names.count(ref[r].front()))
                out[i].catalogue_ids.push_back(static_cast<int>(r) + 1);
    }
    return out;
}

// ---------------------------------------------------------------------------
// reduction engine

namespace {

constexpr double kEps = 1e-9;

struct RGraph {
    std::vector<char> active;
    std::vector<double> self;          // 0 when absent
    std::vector<char> has_self;
    std::map<std::pair<int, int>, double> edges; // u < v

    static RGraph from(const DiagramGraph& g, double alpha, double beta) {
        RGraph r;
        r.active.assign(g.n_vertices, 1);
        r.self.assign(g.n_vertices, 0.0);
        r.has_self.assign(g.n_vertices, 0);
        for (const auto& [u, v, wt] : g.edges) {
            double val = wt.value(alpha, beta);
            if (u == v) {
                r.self[u] += val;
                r.has_self[u] = 1;
            } else {
                r.edges[{u, v}] += val;
            }
        }
        return r;
    }

    bool empty() const {
        for (std::size_t i = 0; i < active.size(); ++i)
            if (active[i]) return false;
        return true;
    }

    std::vector<std::pair<int, double>> neighbors(int v) const {
        std::vector<std::pair<int, double>> out;
        for (const auto& [key, wgt] : edges) {
            if (key.first == v) out.emplace_back(key.second, wgt);
            else if (key.second == v) out.emplace_back(key.first, wgt);
        }
        return out;
    }

    void drop_vertex(int v) {
        active[v] = 0;
        has_self[v] = 0;
        self[v] = 0.0;
        for (auto it = edges.begin(); it != edges.end();) {
            if (it->first.first == v || it->first.second == v) it = edges.erase(it);
            else ++it;
        }
    }

    void add_edge(int u, int v, double wgt) {
        if (u == v) {
            self[u] += wgt;
            has_self[u] = 1;
            return;
        }
        if (u > v) std::swap(u, v);
        edges[{u, v}] += wgt;
    }

    void add_self(int v, double wgt) {
        self[v] += wgt;
        has_self[v] = 1;
    }

    std::string key() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (!active[i]) continue;
            os << i << ':';
            if (has_self[i]) os.write(reinterpret_cast<const char*>(&self[i]), sizeof(double));
            os << ';';
        }
        for (const auto& [key, wgt] : edges) {
            os << key.first << ',' << key.second << ':';
            os.write(reinterpret_cast<const char*>(&wgt), sizeof(double));
        }
        return os.str();
    }
};

struct Move {
    ReductionStep step;
    RGraph next;
};

// All rule moves applicable at `g`, in the deterministic preference order:
// rule 1, rule 4, rule 2, rule 3, rule 5; vertices ascending within a rule.
std::vector<Move> rule_moves(const RGraph& g, double delta) {
    std::vector<Move> moves;
    const int n = static_cast<int>(g.active.size());
    auto push = [&](RGraph next, ReductionStep step) {
        moves.push_back({std::move(step), std::move(next)});
    };

    // rule 1: degree-2 vertex, no self-loop
    for (int v = 0; v < n; ++v) {
        if (!g.active[v] || g.has_self[v]) continue;
        auto nb = g.neighbors(v);
        if (nb.size() != 2) continue;
        auto [u, a] = nb[0];
        auto [x, b] = nb[1];
        double neww = 0.0;
        int rule_case = 0;
        if (a > kEps && a < 1.0 - kEps && b > kEps && b < 1.0 - kEps && a + b - 1.0 > kEps) {
            neww = a + b - 1.0;
            rule_case = 1;
        } else if ((a >= 1.0 - kEps || b >= 1.0 - kEps) && std::min(a, b) > kEps &&
                   std::min(a, b) - delta > kEps) {
            neww = std::min(a, b) - delta;
            rule_case = 2;
        } else {
            continue;
        }
        RGraph next = g;
        next.drop_vertex(v);
        next.add_edge(u, x, neww);
        ReductionStep step;
        step.rule = 1;
        step.rule_case = rule_case;
        step.vertex = v;
        step.eu = u;
        step.ev = x;
        step.produced_weight = neww;
        push(std::move(next), step);
    }

    // rule 4: self-loop in (0,1) with two unit edges
    for (int v = 0; v < n; ++v) {
        if (!g.active[v] || !g.has_self[v]) continue;
        double a = g.self[v];
        if (!(a > kEps && a < 1.0 - kEps)) continue;
        auto nb = g.neighbors(v);
        if (nb.size() != 2) continue;
        if (std::abs(nb[0].second - 1.0) > kEps || std::abs(nb[1].second - 1.0) > kEps) continue;
        RGraph next = g;
        next.drop_vertex(v);
        next.add_edge(nb[0].first, nb[1].first, 1.0);
        ReductionStep step;
        step.rule = 4;
        step.rule_case = 6;
        step.vertex = v;
        step.eu = nb[0].first;
        step.ev = nb[1].first;
        step.produced_weight = 1.0;
        push(std::move(next), step);
    }

    // rule 2: self-loop with exactly one edge
    for (int v = 0; v < n; ++v) {
        if (!g.active[v] || !g.has_self[v]) continue;
        auto nb = g.neighbors(v);
        if (nb.size() != 1) continue;
        double a = g.self[v];
        auto [u, b] = nb[0];
        double neww = 0.0;
        int rule_case = 0;
        if (a > kEps && a < 1.0 - kEps && b > kEps && a + b - 1.0 > kEps) {
            neww = a + b - 1.0;
            rule_case = 3;
        } else if (a >= 1.0 - kEps && b > kEps && b - delta > kEps) {
            neww = b - delta;
            rule_case = 4;
        } else {
            continue;
        }
        RGraph next = g;
        next.drop_vertex(v);
        next.add_self(u, neww);
        ReductionStep step;
        step.rule = 2;
        step.rule_case = rule_case;
        step.vertex = v;
        step.eu = u;
        step.produced_weight = neww;
        push(std::move(next), step);
    }

    // rule 3: bare degree-1 vertex. A two-vertex component with a single
    // edge is the terminal global double sum and is left to rule 5 (7).
    for (int v = 0; v < n; ++v) {
        if (!g.active[v] || g.has_self[v]) continue;
        auto nb = g.neighbors(v);
        if (nb.size() != 1) continue;
        auto [u, a] = nb[0];
        if (!g.has_self[u] && g.neighbors(u).size() == 1) continue;
        if (!(a > 1.0 + kEps)) continue;
        RGraph next = g;
        next.drop_vertex(v);
        next.add_self(u, a - 1.0);
        ReductionStep step;
        step.rule = 3;
        step.rule_case = 5;
        step.vertex = v;
        step.eu = u;
        step.produced_weight = a - 1.0;
        push(std::move(next), step);
    }

    // rule 5 case 7: two-vertex component, single edge, no self-loops
    for (const auto& [key, wgt] : g.edges) {
        auto [u, v] = key;
        if (g.has_self[u] || g.has_self[v]) continue;
        if (g.neighbors(u).size() != 1 || g.neighbors(v).size() != 1) continue;
        if (!(wgt > 1.0 + kEps)) continue;
        RGraph next = g;
        next.drop_vertex(v);
        next.add_self(u, wgt - 1.0);
        ReductionStep step;
        step.rule = 5;
        step.rule_case = 7;
        step.vertex = v;
        step.eu = u;
        step.ev = v;
        step.produced_weight = wgt - 1.0;
        push(std::move(next), step);
    }

    // rule 5 case 8: isolated vertex whose self-loop exceeds 1
    for (int v = 0; v < n; ++v) {
        if (!g.active[v] || !g.has_self[v]) continue;
        if (!g.neighbors(v).empty()) continue;
        double a = g.self[v];
        if (!(a > 1.0 + kEps)) continue;
        RGraph next = g;
        next.drop_vertex(v);
        ReductionStep step;
        step.rule = 5;
        step.rule_case = 8;
        step.vertex = v;
        step.produced_weight = a;
        push(std::move(next), step);
    }

    return moves;
}

// Drop moves: bound a factor 1/A^w by 1 (valid for w >= 0 since A >= 1),
// i.e. delete the edge. Ordered by ascending weight so the cheapest bound
// is tried first.
std::vector<Move> drop_moves(const RGraph& g) {
    std::vector<std::tuple<double, int, int>> cand; // weight, u, v (u==v self)
    for (const auto& [key, wgt] : g.edges)
        if (wgt >= -kEps) cand.emplace_back(wgt, key.first, key.second);
    for (std::size_t v = 0; v < g.active.size(); ++v)
        if (g.active[v] && g.has_self[v] && g.self[v] >= -kEps)
            cand.emplace_back(g.self[v], static_cast<int>(v), static_cast<int>(v));
    std::sort(cand.begin(), cand.end());
    std::vector<Move> moves;
    for (const auto& [wgt, u, v] : cand) {
        RGraph next = g;
        if (u == v) {
            next.self[u] = 0.0;
            next.has_self[u] = 0;
        } else {
            next.edges.erase({u, v});
        }
        ReductionStep step;
        step.rule = 0;
        step.rule_case = 0;
        step.eu = u;
        step.ev = v;
        step.produced_weight = wgt;
        step.note = "drop (bound 1/A^w by 1)";
        moves.push_back({step, std::move(next)});
    }
    return moves;
}

struct Search {
    double delta;
    int max_drops;
    std::set<std::string> failed;
    std::vector<ReductionStep> path;
    std::vector<double> finals;
    long long nodes = 0;

    bool run(const RGraph& g, int drops_used) {
        if (++nodes > 200000) return false;
        if (g.empty()) return true;
        std::string k = g.key();
        if (failed.count(k)) return false;

        for (auto& mv : rule_moves(g, delta)) {
            path.push_back(mv.step);
            if (mv.step.rule_case == 8) finals.push_back(mv.step.produced_weight);
            if (run(mv.next, drops_used)) return true;
            if (mv.step.rule_case == 8) finals.pop_back();
            path.pop_back();
        }
        if (drops_used < max_drops) {
            for (auto& mv : drop_moves(g)) {
                path.push_back(mv.step);
                if (run(mv.next, drops_used + 1)) return true;
                path.pop_back();
            }
        }
        failed.insert(std::move(k));
        return false;
    }
};

} // namespace

std::string ReductionTrace::to_string() const {
    std::ostringstream os;
    for (const auto& s : steps) {
        if (s.rule == 0) {
            os << "drop edge (" << s.eu << "," << s.ev << ") w=" << s.produced_weight << "\n";
        } else {
            os << "rule " << s.rule << " case (" << s.rule_case << ") on vertex " << s.vertex;
            if (s.rule_case == 8) os << " : sum 1/A^" << s.produced_weight << " finite";
            else os << " -> weight " << s.produced_weight;
            os << "\n";
        }
    }
    os << (outcome == ReductionOutcome::finite ? "outcome: finite" : "outcome: stuck");
    if (!stuck_reason.empty()) os << " (" << stuck_reason << ")";
    os << "\n";
    return os.str();
}

ReductionTrace reduce(const DiagramGraph& g, double alpha, double beta, double delta) {
    ReductionTrace trace;
    RGraph r = RGraph::from(g, alpha, beta);
    Search search;
    search.delta = delta;
    search.max_drops = 8;
    if (search.run(r, 0)) {
        trace.outcome = ReductionOutcome::finite;
        trace.steps = std::move(search.path);
        trace.final_exponents = std::move(search.finals);
    } else {
        trace.outcome = ReductionOutcome::stuck;
        trace.steps.clear();
        trace.stuck_reason =
            "no admissible rule sequence certifies finiteness at these exponents";
    }
    return trace;
}

// ---------------------------------------------------------------------------
// numeric sums

namespace {

struct Factor {
    std::vector<int> scope; // ascending vertex ids
    std::vector<double> data;
};

double a_weight(int m, int n, const ModelParams& p) { return p.weight(m, n); }

// sum over each free vertex 0..n_sum of prod 1/A_uv^w, by variable
// elimination (greedy min-fill order on these tiny graphs).
double eliminate_sum(int n_vertices, const std::vector<std::tuple<int, int, double>>& weights,
                     const ModelParams& params, int n_sum) {
    const int range = n_sum + 1;
    std::vector<Factor> factors;
    for (const auto& [u, v, wgt] : weights) {
        Factor f;
        if (u == v) {
            f.scope = {u};
            f.data.resize(range);
            for (int i = 0; i < range; ++i)
                f.data[i] = std::pow(a_weight(i, i, params), -wgt);
        } else {
            f.scope = {u, v};
            f.data.resize(static_cast<std::size_t>(range) * range);
            for (int i = 0; i < range; ++i)
                for (int j = 0; j < range; ++j)
                    f.data[static_cast<std::size_t>(i) * range + j] =
                        std::pow(a_weight(i, j, params), -wgt);
        }
        factors.push_back(std::move(f));
    }

    std::vector<char> remaining(n_vertices, 1);
    double scalar = 1.0;

    auto scope_after = [&](int v) {
        std::set<int> s;
        for (const auto& f : factors)
            if (std::find(f.scope.begin(), f.scope.end(), v) != f.scope.end())
                for (int x : f.scope)
                    if (x != v) s.insert(x);
        return s;
    };

    for (int left = n_vertices; left > 0; --left) {
        int best = -1;
        std::size_t best_size = SIZE_MAX;
        for (int v = 0; v < n_vertices; ++v) {
            if (!remaining[v]) continue;
            std::size_t sz = scope_after(v).size();
            if (sz < best_size) {
                best_size = sz;
                best = v;
            }
        }
        int v = best;
        remaining[v] = 0;

        std::vector<Factor> touching, rest;
        for (auto& f : factors) {
            if (std::find(f.scope.begin(), f.scope.end(), v) != f.scope.end())
                touching.push_back(std::move(f));
            else rest.push_back(std::move(f));
        }
        std::set<int> merged_set;
        for (const auto& f : touching)
            for (int x : f.scope)
                if (x != v) merged_set.insert(x);
        std::vector<int> merged(merged_set.begin(), merged_set.end());

        std::size_t out_size = 1;
        for (std::size_t i = 0; i < merged.size(); ++i) out_size *= range;
        Factor out;
        out.scope = merged;
        out.data.assign(out_size, 0.0);

        std::vector<int> assign(merged.size(), 0);
        std::vector<std::vector<int>> positions(touching.size());
        // map each touching factor's scope onto (merged + v)
        for (std::size_t fi = 0; fi < touching.size(); ++fi) {
            for (int x : touching[fi].scope) {
                if (x == v) positions[fi].push_back(-1);
                else
                    positions[fi].push_back(static_cast<int>(
                        std::find(merged.begin(), merged.end(), x) - merged.begin()));
            }
        }
        for (std::size_t flat = 0; flat < out_size; ++flat) {
            std::size_t rem = flat;
            for (std::size_t i = merged.size(); i-- > 0;) {
                assign[i] = static_cast<int>(rem % range);
                rem /= range;
            }
            double total = 0.0;
            for (int vv = 0; vv < range; ++vv) {
                double prod = 1.0;
                for (std::size_t fi = 0; fi < touching.size(); ++fi) {
                    std::size_t idx = 0;
                    for (std::size_t k = 0; k < touching[fi].scope.size(); ++k) {
                        int val = positions[fi][k] < 0 ? vv : assign[positions[fi][k]];
                        idx = idx * range + static_cast<std::size_t>(val);
                    }
                    prod *= touching[fi].data[idx];
                }
                total += prod;
            }
            out.data[flat] = total;
        }

        factors = std::move(rest);
        if (out.scope.empty()) scalar *= out.data[0];
        else factors.push_back(std::move(out));
    }
    for (const auto& f : factors)
        if (f.scope.empty()) scalar *= f.data[0];
    return scalar;
}

} // namespace

double contraction_sum_numeric(const Pairing& p, double alpha, double beta,
                               const ModelParams& params, int n_sum) {
    DiagramGraph g = pairing_to_graph(p);
    std::vector<std::tuple<int, int, double>> weights;
    for (const auto& [u, v, wt] : g.edges) weights.emplace_back(u, v, wt.value(alpha, beta));
    return eliminate_sum(g.n_vertices, weights, params, n_sum);
}

double contraction_sum_total(double alpha, double beta, const ModelParams& params, int n_sum) {
    double total = 0.0;
    for (const auto& p : enumerate_pairings())
        total += contraction_sum_numeric(p, alpha, beta, params, n_sum);
    return total;
}

double n5_quartic_form(const HermitianField& z, double alpha, double beta, const WeightTable& w) {
    const int n = z.cutoff();
    const int range = n + 1;
    const Eigen::ArrayXXd& w2b = w.pow(2.0 * beta);
    const Eigen::ArrayXXd& w2a = w.pow(-2.0 * alpha);

    // u^{(k,kb)}_m = z_mk z_kb,m ; r^{(l,lb)} = W u-like contraction over n
    std::vector<Eigen::VectorXcd> rvec(static_cast<std::size_t>(range) * range);
    for (int l = 0; l < range; ++l)
        for (int lb = 0; lb < range; ++lb) {
            Eigen::VectorXcd vv(range);
            for (int nn = 0; nn < range; ++nn) vv(nn) = z(l, nn) * z(nn, lb);
            Eigen::VectorXcd r(range);
            for (int m = 0; m < range; ++m) {
                Complex acc = 0.0;
                for (int nn = 0; nn < range; ++nn) acc += w2b(m, nn) * vv(nn);
                r(m) = acc;
            }
            rvec[static_cast<std::size_t>(l) * range + lb] = std::move(r);
        }

    double q = 0.0;
    for (int k = 0; k < range; ++k)
        for (int kb = 0; kb < range; ++kb) {
            Eigen::VectorXcd u(range);
            for (int m = 0; m < range; ++m) u(m) = z(m, k) * z(kb, m);
            for (int l = 0; l < range; ++l)
                for (int lb = 0; lb < range; ++lb) {
                    const Eigen::VectorXcd& r = rvec[static_cast<std::size_t>(l) * range + lb];
                    Complex t = 0.0;
                    for (int m = 0; m < range; ++m) t += u(m) * r(m);
                    q += w2a(k, l) * w2a(kb, lb) * std::norm(t);
                }
        }
    return q;
}

double n5_operator_bound(const HermitianField& z, double alpha, double beta,
                         const WeightTable& w) {
    return std::pow(n5_quartic_form(z, alpha, beta, w), 0.25);
}

McEstimate n5_moment_mc(const ModelParams& params, double alpha, double beta, int n_samples) {
    if (n_samples < 100) throw std::invalid_argument("n5_moment_mc: need n_samples >= 100");
    WeightTable w(params);
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        ModelParams p = params;
        p.seed = mix64(params.seed + 0x6d6f796173716d63ull * (i + 1));
        OUState s = sample_stationary(p, w);
        double q = n5_quartic_form(s.z, alpha, beta, w);
        sum += q;
        sumsq += q * q;
    }
    McEstimate est;
    est.n_samples = n_samples;
    est.mean = sum / n_samples;
    double var = (sumsq - sum * sum / n_samples) / (n_samples - 1);
    est.se = std::sqrt(std::max(var, 0.0) / n_samples);
    return est;
}

} // namespace diagrams
} // namespace moyal
