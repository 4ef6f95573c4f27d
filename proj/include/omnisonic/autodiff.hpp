#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "omnisonic/tensor.hpp"

namespace omnisonic {

// Reverse-mode tape over a fixed op set. Nodes hold values and accumulated
// gradients; each op installs a closure that scatters the output gradient
// into its parents. One tape belongs to one thread.
template <class S>
struct NodeT {
    TensorT<S> value;
    TensorT<S> grad;
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<std::shared_ptr<NodeT>> parents;
    std::function<void(NodeT&)> backward_fn;

    TensorT<S>& ensure_grad() {
        if (!grad_ready) {
            grad = TensorT<S>(value.shape);
            grad_ready = true;
        }
        return grad;
    }

    void zero_grad() {
        if (grad_ready) grad.fill(S(0));
    }
};

template <class S>
using NodePtr = std::shared_ptr<NodeT<S>>;

template <class S>
NodePtr<S> constant(TensorT<S> t) {
    auto n = std::make_shared<NodeT<S>>();
    n->value = std::move(t);
    return n;
}

template <class S>
NodePtr<S> leaf(TensorT<S> t) {
    auto n = std::make_shared<NodeT<S>>();
    n->value = std::move(t);
    n->requires_grad = true;
    n->ensure_grad();
    return n;
}

namespace detail {

template <class S>
NodePtr<S> make_op(const char* name, TensorT<S> out, std::vector<NodePtr<S>> parents,
                   std::function<void(NodeT<S>&)> backward) {
    check_finite(out, name);
    auto n = std::make_shared<NodeT<S>>();
    n->value = std::move(out);
    for (const auto& p : parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward);
    }
    return n;
}

template <class S>
void topo_visit(const NodePtr<S>& n, std::unordered_set<const NodeT<S>*>& seen,
                std::vector<NodePtr<S>>& order) {
    if (!n->requires_grad || seen.count(n.get())) return;
    seen.insert(n.get());
    for (const auto& p : n->parents) topo_visit(p, seen, order);
    order.push_back(n);
}

}  // namespace detail

// Reverse-mode sweep from a scalar objective.
template <class S>
void backward(const NodePtr<S>& root) {
    if (root->value.numel() != 1) fail("backward: objective must be scalar");
    if (!root->requires_grad) return;
    std::unordered_set<const NodeT<S>*> seen;
    std::vector<NodePtr<S>> order;
    detail::topo_visit(root, seen, order);
    for (const auto& n : order) n->ensure_grad();
    root->grad.data[0] = S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }
}

// ---- elementwise ----

template <class S>
NodePtr<S> add(const NodePtr<S>& a, const NodePtr<S>& b) {
    if (!a->value.same_shape(b->value)) fail("add: shape mismatch");
    TensorT<S> out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
    return detail::make_op<S>("add", std::move(out), {a, b}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        const size_t n = o.grad.data.size();
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (size_t i = 0; i < n; ++i) g.data[i] += o.grad.data[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (size_t i = 0; i < n; ++i) g.data[i] += o.grad.data[i];
        }
    });
}

template <class S>
NodePtr<S> sub(const NodePtr<S>& a, const NodePtr<S>& b) {
    if (!a->value.same_shape(b->value)) fail("sub: shape mismatch");
    TensorT<S> out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
    return detail::make_op<S>("sub", std::move(out), {a, b}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        const size_t n = o.grad.data.size();
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (size_t i = 0; i < n; ++i) g.data[i] += o.grad.data[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (size_t i = 0; i < n; ++i) g.data[i] -= o.grad.data[i];
        }
    });
}

template <class S>
NodePtr<S> mul(const NodePtr<S>& a, const NodePtr<S>& b) {
    if (!a->value.same_shape(b->value)) fail("mul: shape mismatch");
    TensorT<S> out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value.data[i];
    return detail::make_op<S>("mul", std::move(out), {a, b}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        const size_t n = o.grad.data.size();
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (size_t i = 0; i < n; ++i) g.data[i] += o.grad.data[i] * pb.value.data[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (size_t i = 0; i < n; ++i) g.data[i] += o.grad.data[i] * pa.value.data[i];
        }
    });
}

template <class S>
NodePtr<S> scale(const NodePtr<S>& a, S c) {
    TensorT<S> out = a->value;
    for (auto& v : out.data) v *= c;
    return detail::make_op<S>("scale", std::move(out), {a}, [c](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        for (size_t i = 0; i < o.grad.data.size(); ++i) g.data[i] += c * o.grad.data[i];
    });
}

template <class S>
NodePtr<S> add_scalar(const NodePtr<S>& a, S c) {
    TensorT<S> out = a->value;
    for (auto& v : out.data) v += c;
    return detail::make_op<S>("add_scalar", std::move(out), {a}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        for (size_t i = 0; i < o.grad.data.size(); ++i) g.data[i] += o.grad.data[i];
    });
}

// Multiply every element by a 1x1 node.
template <class S>
NodePtr<S> scale_node(const NodePtr<S>& a, const NodePtr<S>& s) {
    if (s->value.numel() != 1) fail("scale_node: scale must be 1x1");
    const S sv = s->value.data[0];
    TensorT<S> out = a->value;
    for (auto& v : out.data) v *= sv;
    return detail::make_op<S>("scale_node", std::move(out), {a, s}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        auto& ps = *o.parents[1];
        const S sv2 = ps.value.data[0];
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (size_t i = 0; i < o.grad.data.size(); ++i) g.data[i] += sv2 * o.grad.data[i];
        }
        if (ps.requires_grad) {
            auto& g = ps.ensure_grad();
            S acc = 0;
            for (size_t i = 0; i < o.grad.data.size(); ++i) acc += o.grad.data[i] * pa.value.data[i];
            g.data[0] += acc;
        }
    });
}

template <class S>
NodePtr<S> rcp(const NodePtr<S>& a) {
    TensorT<S> out = a->value;
    for (auto& v : out.data) v = S(1) / v;
    return detail::make_op<S>("rcp", std::move(out), {a}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        for (size_t i = 0; i < o.grad.data.size(); ++i) {
            const S y = o.value.data[i];
            g.data[i] -= o.grad.data[i] * y * y;
        }
    });
}

template <class S>
NodePtr<S> silu(const NodePtr<S>& a) {
    TensorT<S> out = a->value;
    for (auto& v : out.data) {
        const S sg = S(1) / (S(1) + std::exp(-v));
        v = v * sg;
    }
    return detail::make_op<S>("silu", std::move(out), {a}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        for (size_t i = 0; i < o.grad.data.size(); ++i) {
            const S x = pa.value.data[i];
            const S sg = S(1) / (S(1) + std::exp(-x));
            g.data[i] += o.grad.data[i] * sg * (S(1) + x * (S(1) - sg));
        }
    });
}

template <class S>
NodePtr<S> softplus(const NodePtr<S>& a) {
    TensorT<S> out = a->value;
    for (auto& v : out.data) {
        v = v > S(20) ? v : std::log1p(std::exp(v));
    }
    return detail::make_op<S>("softplus", std::move(out), {a}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        for (size_t i = 0; i < o.grad.data.size(); ++i) {
            const S sg = S(1) / (S(1) + std::exp(-pa.value.data[i]));
            g.data[i] += o.grad.data[i] * sg;
        }
    });
}

// ---- matrix products ----

template <class S>
NodePtr<S> matmul(const NodePtr<S>& a, const NodePtr<S>& b) {
    TensorT<S> out = matmul_plain(a->value, b->value);
    return detail::make_op<S>("matmul", std::move(out), {a, b}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        if (pa.requires_grad) {
            TensorT<S> da = matmul_nt_plain(o.grad, pb.value);  // g * b^T
            auto& g = pa.ensure_grad();
            for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += da.data[i];
        }
        if (pb.requires_grad) {
            TensorT<S> db = matmul_tn_plain(pa.value, o.grad);  // a^T * g
            auto& g = pb.ensure_grad();
            for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += db.data[i];
        }
    });
}

// a * b^T with a (m x k), b (n x k) -> (m x n). Used for attention scores.
template <class S>
NodePtr<S> matmul_nt(const NodePtr<S>& a, const NodePtr<S>& b) {
    TensorT<S> out = matmul_nt_plain(a->value, b->value);
    return detail::make_op<S>("matmul_nt", std::move(out), {a, b}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        if (pa.requires_grad) {
            TensorT<S> da = matmul_plain(o.grad, pb.value);  // g * b
            auto& g = pa.ensure_grad();
            for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += da.data[i];
        }
        if (pb.requires_grad) {
            TensorT<S> db = matmul_tn_plain(o.grad, pa.value);  // g^T * a
            auto& g = pb.ensure_grad();
            for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += db.data[i];
        }
    });
}

// ---- row-wise normalizations ----

template <class S>
TensorT<S> softmax_rows_plain(const TensorT<S>& x) {
    TensorT<S> out = x;
    const int R = x.rows(), C = x.cols();
    for (int r = 0; r < R; ++r) {
        S* row = &out.data[static_cast<size_t>(r) * C];
        S mx = row[0];
        for (int c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        S sum = 0;
        for (int c = 0; c < C; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (int c = 0; c < C; ++c) row[c] /= sum;
    }
    return out;
}

template <class S>
NodePtr<S> softmax_rows(const NodePtr<S>& a) {
    if (a->value.numel() == 0 || a->value.cols() < 1) fail("softmax: empty input");
    TensorT<S> out = softmax_rows_plain(a->value);
    return detail::make_op<S>("softmax_rows", std::move(out), {a}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        const int R = o.value.rows(), C = o.value.cols();
        for (int r = 0; r < R; ++r) {
            const S* p = &o.value.data[static_cast<size_t>(r) * C];
            const S* go = &o.grad.data[static_cast<size_t>(r) * C];
            S dot = 0;
            for (int c = 0; c < C; ++c) dot += go[c] * p[c];
            S* gi = &g.data[static_cast<size_t>(r) * C];
            for (int c = 0; c < C; ++c) gi[c] += p[c] * (go[c] - dot);
        }
    });
}

// Per-row standardization with population variance; no learned affine.
template <class S>
NodePtr<S> layer_norm_rows(const NodePtr<S>& a, S eps) {
    const int R = a->value.rows(), C = a->value.cols();
    TensorT<S> out({R, C});
    TensorT<S> inv_std({R, 1});
    for (int r = 0; r < R; ++r) {
        const S* x = &a->value.data[static_cast<size_t>(r) * C];
        S mean = 0;
        for (int c = 0; c < C; ++c) mean += x[c];
        mean /= S(C);
        S var = 0;
        for (int c = 0; c < C; ++c) var += (x[c] - mean) * (x[c] - mean);
        var /= S(C);
        const S is = S(1) / std::sqrt(var + eps);
        inv_std.data[r] = is;
        S* y = &out.data[static_cast<size_t>(r) * C];
        for (int c = 0; c < C; ++c) y[c] = (x[c] - mean) * is;
    }
    return detail::make_op<S>("layer_norm", std::move(out), {a}, [inv_std](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        const int R = o.value.rows(), C = o.value.cols();
        for (int r = 0; r < R; ++r) {
            const S* y = &o.value.data[static_cast<size_t>(r) * C];
            const S* go = &o.grad.data[static_cast<size_t>(r) * C];
            S gm = 0, gym = 0;
            for (int c = 0; c < C; ++c) {
                gm += go[c];
                gym += go[c] * y[c];
            }
            gm /= S(C);
            gym /= S(C);
            const S is = inv_std.data[r];
            S* gi = &g.data[static_cast<size_t>(r) * C];
            for (int c = 0; c < C; ++c) gi[c] += is * (go[c] - gm - y[c] * gym);
        }
    });
}

// ---- structure ops ----

template <class S>
NodePtr<S> slice_cols(const NodePtr<S>& a, int c0, int c1) {
    const int R = a->value.rows(), C = a->value.cols();
    if (c0 < 0 || c1 > C || c0 >= c1) fail("slice_cols: bad range");
    const int W = c1 - c0;
    TensorT<S> out({R, W});
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < W; ++c) out.at(r, c) = a->value.at(r, c0 + c);
    }
    return detail::make_op<S>("slice_cols", std::move(out), {a}, [c0, W](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        const int R = o.value.rows();
        for (int r = 0; r < R; ++r) {
            for (int c = 0; c < W; ++c) g.at(r, c0 + c) += o.grad.at(r, c);
        }
    });
}

template <class S>
NodePtr<S> slice_rows(const NodePtr<S>& a, int r0, int r1) {
    const int R = a->value.rows(), C = a->value.cols();
    if (r0 < 0 || r1 > R || r0 >= r1) fail("slice_rows: bad range");
    const int H = r1 - r0;
    TensorT<S> out({H, C});
    std::copy_n(&a->value.data[static_cast<size_t>(r0) * C], static_cast<size_t>(H) * C, out.data.begin());
    return detail::make_op<S>("slice_rows", std::move(out), {a}, [r0, H](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        const int C = o.value.cols();
        for (int r = 0; r < H; ++r) {
            for (int c = 0; c < C; ++c) g.at(r0 + r, c) += o.grad.at(r, c);
        }
    });
}

template <class S>
NodePtr<S> concat_rows(const NodePtr<S>& a, const NodePtr<S>& b) {
    if (a->value.cols() != b->value.cols()) fail("concat_rows: col mismatch");
    const int Ra = a->value.rows(), Rb = b->value.rows(), C = a->value.cols();
    TensorT<S> out({Ra + Rb, C});
    std::copy(a->value.data.begin(), a->value.data.end(), out.data.begin());
    std::copy(b->value.data.begin(), b->value.data.end(), out.data.begin() + a->value.numel());
    return detail::make_op<S>("concat_rows", std::move(out), {a, b}, [Ra](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        const int C = o.value.cols();
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += o.grad.data[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            const size_t off = static_cast<size_t>(Ra) * C;
            for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += o.grad.data[off + i];
        }
    });
}

template <class S>
NodePtr<S> concat_cols(const NodePtr<S>& a, const NodePtr<S>& b) {
    if (a->value.rows() != b->value.rows()) fail("concat_cols: row mismatch");
    const int R = a->value.rows(), Ca = a->value.cols(), Cb = b->value.cols();
    TensorT<S> out({R, Ca + Cb});
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < Ca; ++c) out.at(r, c) = a->value.at(r, c);
        for (int c = 0; c < Cb; ++c) out.at(r, Ca + c) = b->value.at(r, c);
    }
    return detail::make_op<S>("concat_cols", std::move(out), {a, b}, [Ca, Cb](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        const int R = o.value.rows();
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < Ca; ++c) g.at(r, c) += o.grad.at(r, c);
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < Cb; ++c) g.at(r, c) += o.grad.at(r, Ca + c);
        }
    });
}

// out row i = a row idx[i]; gradient scatter-adds back. Also serves as a
// row-broadcast (idx all zero) and the nearest-neighbor upsampler.
template <class S>
NodePtr<S> gather_rows(const NodePtr<S>& a, std::vector<int> idx) {
    const int R = a->value.rows(), C = a->value.cols();
    TensorT<S> out({static_cast<int>(idx.size()), C});
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= R) fail("gather_rows: index out of range");
        std::copy_n(&a->value.data[static_cast<size_t>(idx[i]) * C], C, &out.data[i * C]);
    }
    return detail::make_op<S>("gather_rows", std::move(out), {a}, [idx](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        const int C = o.value.cols();
        for (size_t i = 0; i < idx.size(); ++i) {
            for (int c = 0; c < C; ++c) g.at(idx[i], c) += o.grad.at(static_cast<int>(i), c);
        }
    });
}

// General element permutation/gather: out.data[i] = a.data[src[i]].
// Patchify and unpatchify are bijective instances of this.
template <class S>
NodePtr<S> gather_elements(const NodePtr<S>& a, std::shared_ptr<const std::vector<size_t>> src,
                           std::vector<int> out_shape) {
    TensorT<S> out(std::move(out_shape));
    if (out.numel() != src->size()) fail("gather_elements: map size mismatch");
    for (size_t i = 0; i < src->size(); ++i) {
        const size_t j = (*src)[i];
        if (j >= a->value.numel()) fail("gather_elements: index out of range");
        out.data[i] = a->value.data[j];
    }
    return detail::make_op<S>("gather_elements", std::move(out), {a}, [src](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        for (size_t i = 0; i < src->size(); ++i) g.data[(*src)[i]] += o.grad.data[i];
    });
}

// ---- reductions ----

template <class S>
NodePtr<S> sum_all(const NodePtr<S>& a) {
    S acc = 0;
    for (S v : a->value.data) acc += v;
    return detail::make_op<S>("sum_all", TensorT<S>::scalar(acc), {a}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        const S gv = o.grad.data[0];
        for (auto& v : g.data) v += gv;
    });
}

template <class S>
NodePtr<S> mean_all(const NodePtr<S>& a) {
    return scale(sum_all(a), S(1) / S(a->value.numel()));
}

// Column means: (R x C) -> (1 x C).
template <class S>
NodePtr<S> mean_rows(const NodePtr<S>& a) {
    const int R = a->value.rows(), C = a->value.cols();
    TensorT<S> out({1, C});
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) out.data[c] += a->value.at(r, c);
    for (auto& v : out.data) v /= S(R);
    return detail::make_op<S>("mean_rows", std::move(out), {a}, [R](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        const int C = o.value.cols();
        for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c) g.at(r, c) += o.grad.data[c] / S(R);
    });
}

// Inclusive prefix sum over a 1 x L row vector.
template <class S>
NodePtr<S> cumsum_vec(const NodePtr<S>& a) {
    if (a->value.rows() != 1) fail("cumsum_vec: expects 1 x L");
    TensorT<S> out = a->value;
    for (size_t i = 1; i < out.data.size(); ++i) out.data[i] += out.data[i - 1];
    return detail::make_op<S>("cumsum_vec", std::move(out), {a}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        auto& g = pa.ensure_grad();
        S acc = 0;
        for (size_t i = o.grad.data.size(); i-- > 0;) {
            acc += o.grad.data[i];
            g.data[i] += acc;
        }
    });
}

// Broadcast-add a 1 x C row vector to every row.
template <class S>
NodePtr<S> add_rowvec(const NodePtr<S>& a, const NodePtr<S>& v) {
    const int R = a->value.rows(), C = a->value.cols();
    if (v->value.rows() != 1 || v->value.cols() != C) fail("add_rowvec: shape mismatch");
    TensorT<S> out = a->value;
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) out.at(r, c) += v->value.data[c];
    return detail::make_op<S>("add_rowvec", std::move(out), {a, v}, [](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        auto& pv = *o.parents[1];
        const int R = o.value.rows(), C = o.value.cols();
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += o.grad.data[i];
        }
        if (pv.requires_grad) {
            auto& g = pv.ensure_grad();
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c) g.data[c] += o.grad.at(r, c);
        }
    });
}

// ---- rotary position embedding ----

// Rotates consecutive pairs (2i, 2i+1) of each row by pos * base^(-2i/C).
// A row position of -1 means "no rotation" (text rows in the condition
// streams). The map is orthogonal, so the backward pass rotates the
// gradient by the opposite angle.
template <class S>
void rope_rows_apply(TensorT<S>& x, const std::vector<int>& positions, double base, int sign) {
    const int R = x.rows(), C = x.cols();
    if (C % 2 != 0) fail("rope: head dim must be even");
    if (static_cast<int>(positions.size()) != R) fail("rope: positions size mismatch");
    for (int r = 0; r < R; ++r) {
        if (positions[r] < 0) continue;
        const double pos = static_cast<double>(positions[r]);
        S* row = &x.data[static_cast<size_t>(r) * C];
        for (int i = 0; i < C / 2; ++i) {
            const double theta = sign * pos * std::pow(base, -2.0 * i / C);
            const S cs = static_cast<S>(std::cos(theta));
            const S sn = static_cast<S>(std::sin(theta));
            const S x0 = row[2 * i], x1 = row[2 * i + 1];
            row[2 * i] = cs * x0 - sn * x1;
            row[2 * i + 1] = sn * x0 + cs * x1;
        }
    }
}

template <class S>
NodePtr<S> rope_rows(const NodePtr<S>& a, std::vector<int> positions, double base = 10000.0) {
    TensorT<S> out = a->value;
    rope_rows_apply(out, positions, base, +1);
    return detail::make_op<S>("rope_rows", std::move(out), {a}, [positions, base](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        if (!pa.requires_grad) return;
        TensorT<S> gin = o.grad;
        rope_rows_apply(gin, positions, base, -1);
        auto& g = pa.ensure_grad();
        for (size_t i = 0; i < g.data.size(); ++i) g.data[i] += gin.data[i];
    });
}

// ---- losses ----

template <class S>
NodePtr<S> mse(const NodePtr<S>& a, const NodePtr<S>& b) {
    if (!a->value.same_shape(b->value)) fail("mse: shape mismatch");
    const size_t n = a->value.numel();
    S acc = 0;
    for (size_t i = 0; i < n; ++i) {
        const S d = a->value.data[i] - b->value.data[i];
        acc += d * d;
    }
    acc /= S(n);
    return detail::make_op<S>("mse", TensorT<S>::scalar(acc), {a, b}, [n](NodeT<S>& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        const S g2 = o.grad.data[0] * S(2) / S(n);
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (size_t i = 0; i < n; ++i) g.data[i] += g2 * (pa.value.data[i] - pb.value.data[i]);
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (size_t i = 0; i < n; ++i) g.data[i] -= g2 * (pa.value.data[i] - pb.value.data[i]);
        }
    });
}

}  // namespace omnisonic
