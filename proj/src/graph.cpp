#include "seqforge/graph.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <stdexcept>

namespace seqforge {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

ConstMatMap as_matrix(const Tensor& t, std::size_t r, std::size_t c) {
    return ConstMatMap(t.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

MatMap as_matrix(Tensor& t, std::size_t r, std::size_t c) {
    return MatMap(t.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

double apply_act(double x, Activation act) {
    switch (act) {
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::Tanh: return std::tanh(x);
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::Identity: return x;
    }
    return x;
}

// Derivative expressed through the activation output.
double act_deriv_from_output(double y, Activation act) {
    switch (act) {
        case Activation::Sigmoid: return y * (1.0 - y);
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Relu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

}  // namespace

NodeId Graph::push(Tensor value, bool requires_grad, std::function<void(Graph&)> back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tensor& Graph::grad_buf(NodeId id) {
    Node& n = nodes_[id];
    if (!n.grad_set) {
        n.grad = Tensor::zeros(n.value.shape());
        n.grad_set = true;
    }
    return n.grad;
}

void Graph::ensure_scalar(NodeId id, const char* what) const {
    if (nodes_[id].value.numel() != 1)
        throw std::invalid_argument(std::string(what) + ": scalar node required");
}

NodeId Graph::constant(Tensor v) { return push(std::move(v), false, nullptr); }

NodeId Graph::leaf(Tensor v) { return push(std::move(v), true, nullptr); }

NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (!va.same_shape(vb)) throw std::invalid_argument("add: shape mismatch");
    Tensor out = va;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a, b](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            if (g.nodes_[a].requires_grad) {
                Tensor& ga = g.grad_buf(a);
                for (std::size_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
            }
            if (g.nodes_[b].requires_grad) {
                Tensor& gb = g.grad_buf(b);
                for (std::size_t i = 0; i < go.numel(); ++i) gb[i] += go[i];
            }
        };
    }
    return id;
}

NodeId Graph::sub(NodeId a, NodeId b) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (!va.same_shape(vb)) throw std::invalid_argument("sub: shape mismatch");
    Tensor out = va;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= vb[i];
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a, b](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            if (g.nodes_[a].requires_grad) {
                Tensor& ga = g.grad_buf(a);
                for (std::size_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
            }
            if (g.nodes_[b].requires_grad) {
                Tensor& gb = g.grad_buf(b);
                for (std::size_t i = 0; i < go.numel(); ++i) gb[i] -= go[i];
            }
        };
    }
    return id;
}

NodeId Graph::mul(NodeId a, NodeId b) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    const std::size_t rows = va.rows();
    const std::size_t cols = va.cols();
    const bool broadcast = !va.same_shape(vb);
    if (broadcast && !(vb.rank() == 2 && vb.dim(0) == rows && vb.dim(1) == 1))
        throw std::invalid_argument("mul: shapes incompatible");

    Tensor out = va;
    if (broadcast) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] *= vb[r];
    } else {
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= vb[i];
    }
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a, b, rows, cols, broadcast](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            const Tensor& va = g.nodes_[a].value;
            const Tensor& vb = g.nodes_[b].value;
            if (g.nodes_[a].requires_grad) {
                Tensor& ga = g.grad_buf(a);
                if (broadcast) {
                    for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < cols; ++c)
                            ga[r * cols + c] += go[r * cols + c] * vb[r];
                } else {
                    for (std::size_t i = 0; i < go.numel(); ++i) ga[i] += go[i] * vb[i];
                }
            }
            if (g.nodes_[b].requires_grad) {
                Tensor& gb = g.grad_buf(b);
                if (broadcast) {
                    for (std::size_t r = 0; r < rows; ++r) {
                        double s = 0.0;
                        for (std::size_t c = 0; c < cols; ++c)
                            s += go[r * cols + c] * va[r * cols + c];
                        gb[r] += s;
                    }
                } else {
                    for (std::size_t i = 0; i < go.numel(); ++i) gb[i] += go[i] * va[i];
                }
            }
        };
    }
    return id;
}

NodeId Graph::scale(NodeId a, double c) {
    Tensor out = nodes_[a].value;
    for (auto& x : out.values()) x *= c;
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a, c](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            Tensor& ga = g.grad_buf(a);
            for (std::size_t i = 0; i < go.numel(); ++i) ga[i] += c * go[i];
        };
    }
    return id;
}

NodeId Graph::activate(NodeId a, Activation act) {
    Tensor out = nodes_[a].value;
    for (auto& x : out.values()) x = apply_act(x, act);
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a, act](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            const Tensor& vo = g.nodes_[id].value;
            Tensor& ga = g.grad_buf(a);
            for (std::size_t i = 0; i < go.numel(); ++i)
                ga[i] += go[i] * act_deriv_from_output(vo[i], act);
        };
    }
    return id;
}

NodeId Graph::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;

    // Supported forms: rank2 x rank2 (any transposes) and rank2 x rank1
    // (matrix-vector, no transposes) returning rank1.
    const bool matvec = vb.rank() == 1;
    if (matvec) {
        if (trans_a || trans_b || va.rank() != 2 || va.dim(1) != vb.dim(0))
            throw std::invalid_argument("matmul: bad matrix-vector operands");
        const std::size_t r = va.dim(0), k = va.dim(1);
        Tensor out({r});
        for (std::size_t i = 0; i < r; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) s += va[i * k + j] * vb[j];
            out[i] = s;
        }
        bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
        NodeId id = push(std::move(out), rg, nullptr);
        if (rg) {
            nodes_[id].back = [id, a, b, r, k](Graph& g) {
                const Tensor& go = g.nodes_[id].grad;
                const Tensor& va = g.nodes_[a].value;
                const Tensor& vb = g.nodes_[b].value;
                if (g.nodes_[a].requires_grad) {
                    Tensor& ga = g.grad_buf(a);
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < k; ++j) ga[i * k + j] += go[i] * vb[j];
                }
                if (g.nodes_[b].requires_grad) {
                    Tensor& gb = g.grad_buf(b);
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < k; ++j) gb[j] += go[i] * va[i * k + j];
                }
            };
        }
        return id;
    }

    if (va.rank() != 2 || vb.rank() != 2) throw std::invalid_argument("matmul: rank-2 operands required");
    const std::size_t am = trans_a ? va.dim(1) : va.dim(0);
    const std::size_t ak = trans_a ? va.dim(0) : va.dim(1);
    const std::size_t bk = trans_b ? vb.dim(1) : vb.dim(0);
    const std::size_t bn = trans_b ? vb.dim(0) : vb.dim(1);
    if (ak != bk) throw std::invalid_argument("matmul: inner dimension mismatch");

    Tensor out({am, bn});
    {
        auto A = as_matrix(va, va.dim(0), va.dim(1));
        auto B = as_matrix(vb, vb.dim(0), vb.dim(1));
        auto C = as_matrix(out, am, bn);
        if (!trans_a && !trans_b) C.noalias() = A * B;
        else if (trans_a && !trans_b) C.noalias() = A.transpose() * B;
        else if (!trans_a && trans_b) C.noalias() = A * B.transpose();
        else C.noalias() = A.transpose() * B.transpose();
    }
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a, b, trans_a, trans_b, am, bn](Graph& g) {
            const Tensor& gt = g.nodes_[id].grad;
            const Tensor& va = g.nodes_[a].value;
            const Tensor& vb = g.nodes_[b].value;
            auto G = as_matrix(gt, am, bn);
            auto A = as_matrix(va, va.dim(0), va.dim(1));
            auto B = as_matrix(vb, vb.dim(0), vb.dim(1));
            if (g.nodes_[a].requires_grad) {
                auto GA = as_matrix(g.grad_buf(a), va.dim(0), va.dim(1));
                if (!trans_a && !trans_b) GA.noalias() += G * B.transpose();
                else if (trans_a && !trans_b) GA.noalias() += B * G.transpose();
                else if (!trans_a && trans_b) GA.noalias() += G * B;
                else GA.noalias() += B.transpose() * G.transpose();
            }
            if (g.nodes_[b].requires_grad) {
                auto GB = as_matrix(g.grad_buf(b), vb.dim(0), vb.dim(1));
                if (!trans_a && !trans_b) GB.noalias() += A.transpose() * G;
                else if (trans_a && !trans_b) GB.noalias() += A * G;
                else if (!trans_a && trans_b) GB.noalias() += G.transpose() * A;
                else GB.noalias() += G.transpose() * A.transpose();
            }
        };
    }
    return id;
}

NodeId Graph::affine(NodeId x, NodeId w, NodeId h, NodeId u, NodeId b) {
    const Tensor& vx = nodes_[x].value;
    const Tensor& vw = nodes_[w].value;
    const Tensor& vh = nodes_[h].value;
    const Tensor& vu = nodes_[u].value;
    const Tensor& vb = nodes_[b].value;
    const std::size_t rows = vx.dim(0), dx = vx.dim(1), dh = vh.dim(1), n = vw.dim(1);
    if (vw.dim(0) != dx || vu.dim(0) != dh || vu.dim(1) != n || vh.dim(0) != rows || vb.numel() != n)
        throw std::invalid_argument("affine: shape mismatch");

    Tensor out({rows, n});
    {
        auto X = as_matrix(vx, rows, dx);
        auto W = as_matrix(vw, dx, n);
        auto H = as_matrix(vh, rows, dh);
        auto U = as_matrix(vu, dh, n);
        auto O = as_matrix(out, rows, n);
        O.noalias() = X * W;
        O.noalias() += H * U;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < n; ++c) out[r * n + c] += vb[c];
    }
    bool rg = nodes_[x].requires_grad || nodes_[w].requires_grad || nodes_[h].requires_grad ||
              nodes_[u].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, x, w, h, u, b, rows, dx, dh, n](Graph& g) {
            const Tensor& gt = g.nodes_[id].grad;
            auto G = as_matrix(gt, rows, n);
            const Tensor& vx = g.nodes_[x].value;
            const Tensor& vw = g.nodes_[w].value;
            const Tensor& vh = g.nodes_[h].value;
            const Tensor& vu = g.nodes_[u].value;
            auto X = as_matrix(vx, rows, dx);
            auto W = as_matrix(vw, dx, n);
            auto H = as_matrix(vh, rows, dh);
            auto U = as_matrix(vu, dh, n);
            if (g.nodes_[x].requires_grad)
                as_matrix(g.grad_buf(x), rows, dx).noalias() += G * W.transpose();
            if (g.nodes_[w].requires_grad)
                as_matrix(g.grad_buf(w), dx, n).noalias() += X.transpose() * G;
            if (g.nodes_[h].requires_grad)
                as_matrix(g.grad_buf(h), rows, dh).noalias() += G * U.transpose();
            if (g.nodes_[u].requires_grad)
                as_matrix(g.grad_buf(u), dh, n).noalias() += H.transpose() * G;
            if (g.nodes_[b].requires_grad) {
                Tensor& gb = g.grad_buf(b);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < n; ++c) gb[c] += gt[r * n + c];
            }
        };
    }
    return id;
}

NodeId Graph::linear(NodeId x, NodeId w, NodeId b) {
    const Tensor& vx = nodes_[x].value;
    const Tensor& vw = nodes_[w].value;
    const Tensor& vb = nodes_[b].value;
    const std::size_t rows = vx.dim(0), dx = vx.dim(1), n = vw.dim(1);
    if (vw.dim(0) != dx || vb.numel() != n) throw std::invalid_argument("linear: shape mismatch");

    Tensor out({rows, n});
    {
        auto X = as_matrix(vx, rows, dx);
        auto W = as_matrix(vw, dx, n);
        as_matrix(out, rows, n).noalias() = X * W;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < n; ++c) out[r * n + c] += vb[c];
    }
    bool rg = nodes_[x].requires_grad || nodes_[w].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, x, w, b, rows, dx, n](Graph& g) {
            const Tensor& gt = g.nodes_[id].grad;
            auto G = as_matrix(gt, rows, n);
            auto X = as_matrix(g.nodes_[x].value, rows, dx);
            auto W = as_matrix(g.nodes_[w].value, dx, n);
            if (g.nodes_[x].requires_grad)
                as_matrix(g.grad_buf(x), rows, dx).noalias() += G * W.transpose();
            if (g.nodes_[w].requires_grad)
                as_matrix(g.grad_buf(w), dx, n).noalias() += X.transpose() * G;
            if (g.nodes_[b].requires_grad) {
                Tensor& gb = g.grad_buf(b);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < n; ++c) gb[c] += gt[r * n + c];
            }
        };
    }
    return id;
}

NodeId Graph::gate(NodeId z, std::size_t offset, std::size_t width, Activation act) {
    const Tensor& vz = nodes_[z].value;
    const std::size_t rows = vz.dim(0), cols = vz.dim(1);
    if (offset + width > cols) throw std::invalid_argument("gate: slice out of range");
    Tensor out({rows, width});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < width; ++c)
            out[r * width + c] = apply_act(vz[r * cols + offset + c], act);
    bool rg = nodes_[z].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, z, offset, width, cols, rows, act](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            const Tensor& vo = g.nodes_[id].value;
            Tensor& gz = g.grad_buf(z);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < width; ++c)
                    gz[r * cols + offset + c] +=
                        go[r * width + c] * act_deriv_from_output(vo[r * width + c], act);
        };
    }
    return id;
}

NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
    const std::size_t rows = nodes_[parts[0]].value.dim(0);
    std::size_t total = 0;
    bool rg = false;
    for (NodeId p : parts) {
        const Tensor& v = nodes_[p].value;
        if (v.rank() != 2 || v.dim(0) != rows) throw std::invalid_argument("concat_cols: row mismatch");
        total += v.dim(1);
        rg = rg || nodes_[p].requires_grad;
    }
    Tensor out({rows, total});
    std::size_t off = 0;
    for (NodeId p : parts) {
        const Tensor& v = nodes_[p].value;
        const std::size_t w = v.dim(1);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < w; ++c) out[r * total + off + c] = v[r * w + c];
        off += w;
    }
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        std::vector<NodeId> ps = parts;
        nodes_[id].back = [id, ps, rows, total](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            std::size_t off = 0;
            for (NodeId p : ps) {
                const std::size_t w = g.nodes_[p].value.dim(1);
                if (g.nodes_[p].requires_grad) {
                    Tensor& gp = g.grad_buf(p);
                    for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t c = 0; c < w; ++c)
                            gp[r * w + c] += go[r * total + off + c];
                }
                off += w;
            }
        };
    }
    return id;
}

NodeId Graph::slice_rows(NodeId a, std::size_t offset, std::size_t count) {
    const Tensor& va = nodes_[a].value;
    const std::size_t cols = va.dim(1);
    if (offset + count > va.dim(0)) throw std::invalid_argument("slice_rows: out of range");
    Tensor out({count, cols});
    for (std::size_t i = 0; i < count * cols; ++i) out[i] = va[offset * cols + i];
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a, offset, count, cols](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            Tensor& ga = g.grad_buf(a);
            for (std::size_t i = 0; i < count * cols; ++i) ga[offset * cols + i] += go[i];
        };
    }
    return id;
}

NodeId Graph::reshape(NodeId a, std::vector<std::size_t> shape) {
    const Tensor& va = nodes_[a].value;
    if (Tensor::numel_of(shape) != va.numel()) throw std::invalid_argument("reshape: numel mismatch");
    Tensor out(std::move(shape), va.values());
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            Tensor& ga = g.grad_buf(a);
            for (std::size_t i = 0; i < go.numel(); ++i) ga[i] += go[i];
        };
    }
    return id;
}

NodeId Graph::sum_squares(NodeId a) {
    const Tensor& va = nodes_[a].value;
    double s = 0.0;
    for (double x : va.values()) s += x * x;
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(Tensor::scalar(s), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a](Graph& g) {
            const double go = g.nodes_[id].grad[0];
            const Tensor& va = g.nodes_[a].value;
            Tensor& ga = g.grad_buf(a);
            for (std::size_t i = 0; i < va.numel(); ++i) ga[i] += 2.0 * go * va[i];
        };
    }
    return id;
}

NodeId Graph::mean_sq_error(NodeId a, NodeId b) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (!va.same_shape(vb)) throw std::invalid_argument("mean_sq_error: shape mismatch");
    const std::size_t n = va.numel();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = va[i] - vb[i];
        s += d * d;
    }
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(Tensor::scalar(s / static_cast<double>(n)), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a, b, n](Graph& g) {
            const double go = g.nodes_[id].grad[0];
            const Tensor& va = g.nodes_[a].value;
            const Tensor& vb = g.nodes_[b].value;
            const double c = 2.0 * go / static_cast<double>(n);
            if (g.nodes_[a].requires_grad) {
                Tensor& ga = g.grad_buf(a);
                for (std::size_t i = 0; i < n; ++i) ga[i] += c * (va[i] - vb[i]);
            }
            if (g.nodes_[b].requires_grad) {
                Tensor& gb = g.grad_buf(b);
                for (std::size_t i = 0; i < n; ++i) gb[i] -= c * (va[i] - vb[i]);
            }
        };
    }
    return id;
}

NodeId Graph::weighted_sq_error(NodeId a, Tensor target, Tensor weights) {
    const Tensor& va = nodes_[a].value;
    if (!va.same_shape(target) || !va.same_shape(weights))
        throw std::invalid_argument("weighted_sq_error: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < va.numel(); ++i) {
        const double d = va[i] - target[i];
        s += weights[i] * d * d;
    }
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(Tensor::scalar(s), rg, nullptr);
    if (rg) {
        auto tg = std::make_shared<Tensor>(std::move(target));
        auto wt = std::make_shared<Tensor>(std::move(weights));
        nodes_[id].back = [id, a, tg, wt](Graph& g) {
            const double go = g.nodes_[id].grad[0];
            const Tensor& va = g.nodes_[a].value;
            Tensor& ga = g.grad_buf(a);
            for (std::size_t i = 0; i < va.numel(); ++i)
                ga[i] += 2.0 * go * (*wt)[i] * (va[i] - (*tg)[i]);
        };
    }
    return id;
}

NodeId Graph::add_scalars(const std::vector<NodeId>& scalars) {
    if (scalars.empty()) throw std::invalid_argument("add_scalars: empty");
    double s = 0.0;
    bool rg = false;
    for (NodeId n : scalars) {
        ensure_scalar(n, "add_scalars");
        s += nodes_[n].value[0];
        rg = rg || nodes_[n].requires_grad;
    }
    NodeId id = push(Tensor::scalar(s), rg, nullptr);
    if (rg) {
        std::vector<NodeId> ps = scalars;
        nodes_[id].back = [id, ps](Graph& g) {
            const double go = g.nodes_[id].grad[0];
            for (NodeId p : ps)
                if (g.nodes_[p].requires_grad) g.grad_buf(p)[0] += go;
        };
    }
    return id;
}

NodeId Graph::softmax(NodeId a) {
    const Tensor& va = nodes_[a].value;
    const std::size_t cols = va.rank() <= 1 ? va.numel() : va.dim(va.rank() - 1);
    const std::size_t rows = va.numel() / cols;
    Tensor out = va;
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.data() + r * cols;
        double mx = row[0];
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
        double denom = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] = std::exp(row[c] - mx);
            denom += row[c];
        }
        for (std::size_t c = 0; c < cols; ++c) row[c] /= denom;
    }
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, a, rows, cols](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            const Tensor& vo = g.nodes_[id].value;
            Tensor& ga = g.grad_buf(a);
            for (std::size_t r = 0; r < rows; ++r) {
                double dot = 0.0;
                for (std::size_t c = 0; c < cols; ++c)
                    dot += go[r * cols + c] * vo[r * cols + c];
                for (std::size_t c = 0; c < cols; ++c)
                    ga[r * cols + c] += vo[r * cols + c] * (go[r * cols + c] - dot);
            }
        };
    }
    return id;
}

NodeId Graph::cross_entropy(NodeId logits, const std::vector<int>& labels) {
    const Tensor& vl = nodes_[logits].value;
    const std::size_t rows = vl.dim(0), cols = vl.dim(1);
    if (labels.size() != rows) throw std::invalid_argument("cross_entropy: label count mismatch");
    Tensor probs({rows, cols});
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        double mx = vl[r * cols];
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, vl[r * cols + c]);
        double denom = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            probs[r * cols + c] = std::exp(vl[r * cols + c] - mx);
            denom += probs[r * cols + c];
        }
        for (std::size_t c = 0; c < cols; ++c) probs[r * cols + c] /= denom;
        loss -= std::log(std::max(probs[r * cols + labels[r]], 1e-12));
    }
    loss /= static_cast<double>(rows);
    bool rg = nodes_[logits].requires_grad;
    NodeId id = push(Tensor::scalar(loss), rg, nullptr);
    if (rg) {
        auto pr = std::make_shared<Tensor>(std::move(probs));
        auto lb = std::make_shared<std::vector<int>>(labels);
        nodes_[id].back = [id, logits, pr, lb, rows, cols](Graph& g) {
            const double go = g.nodes_[id].grad[0] / static_cast<double>(rows);
            Tensor& gl = g.grad_buf(logits);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c)
                    gl[r * cols + c] += go * (*pr)[r * cols + c];
                gl[r * cols + (*lb)[r]] -= go;
            }
        };
    }
    return id;
}

NodeId Graph::masked_blend(NodeId cur, NodeId prev, Tensor mask) {
    const Tensor& vc = nodes_[cur].value;
    const Tensor& vp = nodes_[prev].value;
    const std::size_t rows = vc.dim(0), cols = vc.dim(1);
    if (!vc.same_shape(vp) || mask.numel() != rows)
        throw std::invalid_argument("masked_blend: shape mismatch");
    Tensor out({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        const double m = mask[r];
        for (std::size_t c = 0; c < cols; ++c)
            out[r * cols + c] = m * vc[r * cols + c] + (1.0 - m) * vp[r * cols + c];
    }
    bool rg = nodes_[cur].requires_grad || nodes_[prev].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        auto mk = std::make_shared<Tensor>(std::move(mask));
        nodes_[id].back = [id, cur, prev, mk, rows, cols](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            if (g.nodes_[cur].requires_grad) {
                Tensor& gc = g.grad_buf(cur);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c)
                        gc[r * cols + c] += (*mk)[r] * go[r * cols + c];
            }
            if (g.nodes_[prev].requires_grad) {
                Tensor& gp = g.grad_buf(prev);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c)
                        gp[r * cols + c] += (1.0 - (*mk)[r]) * go[r * cols + c];
            }
        };
    }
    return id;
}

NodeId Graph::cosine_matrix(NodeId a) {
    constexpr double kNormFloor = 1e-12;
    const Tensor& va = nodes_[a].value;
    const std::size_t s = va.dim(0), m = va.dim(1);
    std::vector<double> norms(s, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) acc += va[i * m + c] * va[i * m + c];
        norms[i] = std::sqrt(acc);
    }
    Tensor out({s, s});
    for (std::size_t i = 0; i < s; ++i) {
        out[i * s + i] = 1.0;
        for (std::size_t j = i + 1; j < s; ++j) {
            double v = 0.0;
            if (norms[i] >= kNormFloor && norms[j] >= kNormFloor) {
                double dot = 0.0;
                for (std::size_t c = 0; c < m; ++c) dot += va[i * m + c] * va[j * m + c];
                v = dot / (norms[i] * norms[j]);
            }
            out[i * s + j] = v;
            out[j * s + i] = v;
        }
    }
    bool rg = nodes_[a].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        auto nr = std::make_shared<std::vector<double>>(std::move(norms));
        nodes_[id].back = [id, a, nr, s, m](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            const Tensor& vo = g.nodes_[id].value;
            const Tensor& va = g.nodes_[a].value;
            Tensor& ga = g.grad_buf(a);
            for (std::size_t i = 0; i < s; ++i) {
                if ((*nr)[i] < kNormFloor) continue;
                for (std::size_t j = 0; j < s; ++j) {
                    if (j == i || (*nr)[j] < kNormFloor) continue;
                    const double gij = go[i * s + j];
                    if (gij == 0.0) continue;
                    const double inv_i = 1.0 / (*nr)[i];
                    const double inv_j = 1.0 / (*nr)[j];
                    const double inv_ij = inv_i * inv_j;
                    const double mag = vo[i * s + j];
                    // d cos(i,j)/d a_i = a_j/(r_i r_j) - cos * a_i/r_i^2
                    // d cos(i,j)/d a_j = a_i/(r_i r_j) - cos * a_j/r_j^2
                    for (std::size_t c = 0; c < m; ++c) {
                        ga[i * m + c] +=
                            gij * (va[j * m + c] * inv_ij - mag * va[i * m + c] * inv_i * inv_i);
                        ga[j * m + c] +=
                            gij * (va[i * m + c] * inv_ij - mag * va[j * m + c] * inv_j * inv_j);
                    }
                }
            }
        };
    }
    return id;
}

NodeId Graph::attention(NodeId query, NodeId w_query, NodeId bias, NodeId v,
                        const std::vector<NodeId>& proj, const std::vector<NodeId>& enc,
                        Tensor mask) {
    const std::size_t T = proj.size();
    if (enc.size() != T || T == 0) throw std::invalid_argument("attention: timestep mismatch");
    const Tensor& vq = nodes_[query].value;
    const Tensor& vwq = nodes_[w_query].value;
    const Tensor& vb = nodes_[bias].value;
    const Tensor& vv = nodes_[v].value;
    const std::size_t B = vq.dim(0), dq = vq.dim(1), A = vwq.dim(1), M = nodes_[enc[0]].value.dim(1);
    if (vwq.dim(0) != dq || vb.numel() != A || vv.numel() != A || mask.numel() != B * T)
        throw std::invalid_argument("attention: shape mismatch");

    struct State {
        Tensor q_pre;                 // (B, A)
        std::vector<Tensor> tanh_t;   // T x (B, A)
        Tensor weights;               // (B, T)
        Tensor mask;                  // (B, T)
    };
    auto st = std::make_shared<State>();
    st->mask = std::move(mask);
    st->q_pre = Tensor({B, A});
    {
        auto Q = as_matrix(vq, B, dq);
        auto W = as_matrix(vwq, dq, A);
        as_matrix(st->q_pre, B, A).noalias() = Q * W;
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t c = 0; c < A; ++c) st->q_pre[r * A + c] += vb[c];
    }
    Tensor scores({B, T});
    st->tanh_t.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        const Tensor& pt = nodes_[proj[t]].value;
        Tensor th({B, A});
        for (std::size_t i = 0; i < B * A; ++i) th[i] = std::tanh(st->q_pre[i] + pt[i]);
        for (std::size_t r = 0; r < B; ++r) {
            double sc = 0.0;
            for (std::size_t c = 0; c < A; ++c) sc += th[r * A + c] * vv[c];
            scores[r * T + t] = st->mask[r * T + t] > 0.5 ? sc : -1e30;
        }
        st->tanh_t.push_back(std::move(th));
    }
    st->weights = Tensor({B, T});
    for (std::size_t r = 0; r < B; ++r) {
        double mx = scores[r * T];
        for (std::size_t t = 1; t < T; ++t) mx = std::max(mx, scores[r * T + t]);
        double denom = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            st->weights[r * T + t] = std::exp(scores[r * T + t] - mx);
            denom += st->weights[r * T + t];
        }
        for (std::size_t t = 0; t < T; ++t) st->weights[r * T + t] /= denom;
    }
    Tensor ctx({B, M});
    for (std::size_t t = 0; t < T; ++t) {
        const Tensor& et = nodes_[enc[t]].value;
        for (std::size_t r = 0; r < B; ++r) {
            const double wgt = st->weights[r * T + t];
            if (wgt == 0.0) continue;
            for (std::size_t c = 0; c < M; ++c) ctx[r * M + c] += wgt * et[r * M + c];
        }
    }

    bool rg = nodes_[query].requires_grad || nodes_[w_query].requires_grad ||
              nodes_[bias].requires_grad || nodes_[v].requires_grad;
    for (std::size_t t = 0; t < T && !rg; ++t)
        rg = nodes_[proj[t]].requires_grad || nodes_[enc[t]].requires_grad;

    NodeId id = push(std::move(ctx), rg, nullptr);
    if (rg) {
        std::vector<NodeId> pr = proj, en = enc;
        nodes_[id].back = [id, query, w_query, bias, v, pr, en, st, B, dq, A, M, T](Graph& g) {
            const Tensor& gctx = g.nodes_[id].grad;
            const Tensor& vv = g.nodes_[v].value;

            // grad wrt attention weights and enc outputs
            Tensor gw({B, T});
            for (std::size_t t = 0; t < T; ++t) {
                const Tensor& et = g.nodes_[en[t]].value;
                for (std::size_t r = 0; r < B; ++r) {
                    double dot = 0.0;
                    for (std::size_t c = 0; c < M; ++c) dot += gctx[r * M + c] * et[r * M + c];
                    gw[r * T + t] = dot;
                }
                if (g.nodes_[en[t]].requires_grad) {
                    Tensor& ge = g.grad_buf(en[t]);
                    for (std::size_t r = 0; r < B; ++r) {
                        const double wgt = st->weights[r * T + t];
                        if (wgt == 0.0) continue;
                        for (std::size_t c = 0; c < M; ++c)
                            ge[r * M + c] += wgt * gctx[r * M + c];
                    }
                }
            }
            // softmax backward -> score grads (masked entries have weight 0)
            Tensor gs({B, T});
            for (std::size_t r = 0; r < B; ++r) {
                double dot = 0.0;
                for (std::size_t t = 0; t < T; ++t)
                    dot += gw[r * T + t] * st->weights[r * T + t];
                for (std::size_t t = 0; t < T; ++t)
                    gs[r * T + t] = st->weights[r * T + t] * (gw[r * T + t] - dot);
            }
            // through score = v . tanh(q_pre + proj_t)
            Tensor gq_pre({B, A});
            for (std::size_t t = 0; t < T; ++t) {
                const Tensor& th = st->tanh_t[t];
                Tensor gpre({B, A});
                for (std::size_t r = 0; r < B; ++r) {
                    const double gsc = gs[r * T + t];
                    if (gsc == 0.0) continue;
                    for (std::size_t c = 0; c < A; ++c) {
                        const double y = th[r * A + c];
                        gpre[r * A + c] = gsc * vv[c] * (1.0 - y * y);
                    }
                }
                if (g.nodes_[v].requires_grad) {
                    Tensor& gv = g.grad_buf(v);
                    for (std::size_t r = 0; r < B; ++r) {
                        const double gsc = gs[r * T + t];
                        if (gsc == 0.0) continue;
                        for (std::size_t c = 0; c < A; ++c) gv[c] += gsc * th[r * A + c];
                    }
                }
                if (g.nodes_[pr[t]].requires_grad) {
                    Tensor& gp = g.grad_buf(pr[t]);
                    for (std::size_t i = 0; i < B * A; ++i) gp[i] += gpre[i];
                }
                for (std::size_t i = 0; i < B * A; ++i) gq_pre[i] += gpre[i];
            }
            if (g.nodes_[query].requires_grad) {
                auto GQ = as_matrix(g.grad_buf(query), B, dq);
                auto W = as_matrix(g.nodes_[w_query].value, dq, A);
                GQ.noalias() += as_matrix(gq_pre, B, A) * W.transpose();
            }
            if (g.nodes_[w_query].requires_grad) {
                auto GW = as_matrix(g.grad_buf(w_query), dq, A);
                auto Q = as_matrix(g.nodes_[query].value, B, dq);
                GW.noalias() += Q.transpose() * as_matrix(gq_pre, B, A);
            }
            if (g.nodes_[bias].requires_grad) {
                Tensor& gb = g.grad_buf(bias);
                for (std::size_t r = 0; r < B; ++r)
                    for (std::size_t c = 0; c < A; ++c) gb[c] += gq_pre[r * A + c];
            }
        };
    }
    return id;
}

NodeId Graph::conv3x3(NodeId x, NodeId w, NodeId b, bool relu) {
    const Tensor& vx = nodes_[x].value;
    const Tensor& vw = nodes_[w].value;
    const Tensor& vb = nodes_[b].value;
    if (vx.rank() != 4 || vw.rank() != 3 || vw.dim(2) != 9)
        throw std::invalid_argument("conv3x3: expected x (B,C,H,W), w (Co,Ci,9)");
    const std::size_t B = vx.dim(0), Ci = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
    const std::size_t Co = vw.dim(0);
    if (vw.dim(1) != Ci || vb.numel() != Co) throw std::invalid_argument("conv3x3: shape mismatch");

    auto xat = [&](const Tensor& t, std::size_t n, std::size_t c, long i, long j) -> double {
        if (i < 0 || j < 0 || i >= static_cast<long>(H) || j >= static_cast<long>(W)) return 0.0;
        return t[((n * Ci + c) * H + i) * W + j];
    };

    Tensor out({B, Co, H, W});
    for (std::size_t n = 0; n < B; ++n)
        for (std::size_t co = 0; co < Co; ++co)
            for (std::size_t i = 0; i < H; ++i)
                for (std::size_t j = 0; j < W; ++j) {
                    double acc = vb[co];
                    for (std::size_t ci = 0; ci < Ci; ++ci)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx)
                                acc += xat(vx, n, ci, static_cast<long>(i) + dy,
                                           static_cast<long>(j) + dx) *
                                       vw[(co * Ci + ci) * 9 + (dy + 1) * 3 + (dx + 1)];
                    if (relu && acc < 0.0) acc = 0.0;
                    out[((n * Co + co) * H + i) * W + j] = acc;
                }

    bool rg = nodes_[x].requires_grad || nodes_[w].requires_grad || nodes_[b].requires_grad;
    NodeId id = push(std::move(out), rg, nullptr);
    if (rg) {
        nodes_[id].back = [id, x, w, b, relu, B, Ci, Co, H, W](Graph& g) {
            const Tensor& go = g.nodes_[id].grad;
            const Tensor& vo = g.nodes_[id].value;
            const Tensor& vx = g.nodes_[x].value;
            const Tensor& vw = g.nodes_[w].value;
            const bool need_gx = g.nodes_[x].requires_grad;
            const bool need_gw = g.nodes_[w].requires_grad;
            const bool need_gb = g.nodes_[b].requires_grad;
            Tensor* gx = need_gx ? &g.grad_buf(x) : nullptr;
            Tensor* gw = need_gw ? &g.grad_buf(w) : nullptr;
            Tensor* gb = need_gb ? &g.grad_buf(b) : nullptr;
            for (std::size_t n = 0; n < B; ++n)
                for (std::size_t co = 0; co < Co; ++co)
                    for (std::size_t i = 0; i < H; ++i)
                        for (std::size_t j = 0; j < W; ++j) {
                            const std::size_t oi = ((n * Co + co) * H + i) * W + j;
                            double gout = go[oi];
                            if (relu && vo[oi] <= 0.0) gout = 0.0;
                            if (gout == 0.0) continue;
                            if (need_gb) (*gb)[co] += gout;
                            for (std::size_t ci = 0; ci < Ci; ++ci)
                                for (int dy = -1; dy <= 1; ++dy)
                                    for (int dx = -1; dx <= 1; ++dx) {
                                        const long ii = static_cast<long>(i) + dy;
                                        const long jj = static_cast<long>(j) + dx;
                                        if (ii < 0 || jj < 0 || ii >= static_cast<long>(H) ||
                                            jj >= static_cast<long>(W))
                                            continue;
                                        const std::size_t xi =
                                            ((n * Ci + ci) * H + ii) * W + jj;
                                        const std::size_t wi =
                                            (co * Ci + ci) * 9 + (dy + 1) * 3 + (dx + 1);
                                        if (need_gw) (*gw)[wi] += gout * vx[xi];
                                        if (need_gx) (*gx)[xi] += gout * vw[wi];
                                    }
                        }
        };
    }
    return id;
}

void Graph::backward(NodeId root) {
    ensure_scalar(root, "backward");
    grad_buf(root)[0] = 1.0;
    for (NodeId i = root; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.requires_grad && n.grad_set && n.back) n.back(*this);
    }
}

}  // namespace seqforge
