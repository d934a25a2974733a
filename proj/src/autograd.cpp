#include "ttvrs/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace ttvrs::ag {

namespace k = ttvrs::kernels::omp;

Tensor& Node::grad_buffer()
{
    if (grad.empty()) grad = Tensor(value.shape());
    return grad;
}

double Var::item() const
{
    if (node_->value.size() != 1) throw ShapeError("item() on non-scalar " + shape_str(shape()));
    return node_->value[0];
}

Tensor Var::grad() const
{
    return node_->has_grad() ? node_->grad : Tensor(node_->value.shape());
}

void Var::zero_grad()
{
    if (node_->has_grad()) node_->grad.fill(0.0);
}

Var constant(Tensor value)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Var(std::move(n));
}

Var parameter(Tensor value)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward)
{
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const Var& p) { return p && p.requires_grad(); });
    if (any) {
        n->requires_grad = true;
        n->parents.reserve(parents.size());
        for (const auto& p : parents) n->parents.push_back(p.ptr());
        n->backward = std::move(backward);
    }
    return Var(std::move(n));
}

void backward(const Var& root)
{
    if (!root.requires_grad()) return;
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    // Iterative post-order DFS; (node, next parent index) frames.
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node(), 0}};
    seen.insert(root.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p && p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root.node()->grad_buffer().fill(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && n->has_grad()) n->backward(*n);
    }
}

namespace {

void check_same(const Var& a, const Var& b, const char* op)
{
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

Tensor* grad_of(Node& self, std::size_t i)
{
    Node* p = self.parents[i].get();
    return p->requires_grad ? &p->grad_buffer() : nullptr;
}

const Tensor& value_of(Node& self, std::size_t i) { return self.parents[i]->value; }

} // namespace

Var add(const Var& a, const Var& b)
{
    check_same(a, b, "add");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        for (std::size_t p = 0; p < 2; ++p)
            if (Tensor* g = grad_of(self, p))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    });
}

Var sub(const Var& a, const Var& b)
{
    check_same(a, b, "sub");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
        if (Tensor* g = grad_of(self, 1))
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
    });
}

Var mul(const Var& a, const Var& b)
{
    check_same(a, b, "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        const Tensor& av = value_of(self, 0);
        const Tensor& bv = value_of(self, 1);
        if (Tensor* g = grad_of(self, 0))
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * bv[i];
        if (Tensor* g = grad_of(self, 1))
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * av[i];
    });
}

Var scale(const Var& a, double c)
{
    Tensor out = a.value();
    for (auto& v : out.raw()) v *= c;
    return make_op(std::move(out), {a}, [c](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += c * self.grad[i];
    });
}

Var add_scalar(const Var& a, const Var& s)
{
    if (s.size() != 1) throw ShapeError("add_scalar: scalar operand has shape " + shape_str(s.shape()));
    Tensor out = a.value();
    const double sv = s.value()[0];
    for (auto& v : out.raw()) v += sv;
    return make_op(std::move(out), {a, s}, [](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
        if (Tensor* g = grad_of(self, 1)) {
            double acc = 0.0;
            for (double v : self.grad.raw()) acc += v;
            (*g)[0] += acc;
        }
    });
}

Var add_bias(const Var& x, const Var& b)
{
    const int rows = x.value().rows(), cols = x.value().cols();
    if (static_cast<int>(b.size()) != rows)
        throw ShapeError("add_bias: " + shape_str(x.shape()) + " with bias " + shape_str(b.shape()));
    Tensor out = x.value();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(r) * cols + c] += b.value()[r];
    return make_op(std::move(out), {x, b}, [rows, cols](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
        if (Tensor* g = grad_of(self, 1))
            for (int r = 0; r < rows; ++r) {
                double acc = 0.0;
                for (int c = 0; c < cols; ++c) acc += self.grad[static_cast<std::size_t>(r) * cols + c];
                (*g)[r] += acc;
            }
    });
}

Var tanh(const Var& a)
{
    Tensor out = a.value();
    for (auto& v : out.raw()) v = std::tanh(v);
    return make_op(std::move(out), {a}, [](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (std::size_t i = 0; i < g->size(); ++i) {
                const double y = self.value[i];
                (*g)[i] += self.grad[i] * (1.0 - y * y);
            }
    });
}

Var sigmoid(const Var& a)
{
    Tensor out = a.value();
    for (auto& v : out.raw()) v = 1.0 / (1.0 + std::exp(-v));
    return make_op(std::move(out), {a}, [](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (std::size_t i = 0; i < g->size(); ++i) {
                const double y = self.value[i];
                (*g)[i] += self.grad[i] * y * (1.0 - y);
            }
    });
}

Var reshape(const Var& a, Shape shape)
{
    return make_op(a.value().reshaped(std::move(shape)), {a}, [](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    });
}

Var sum(const Var& a)
{
    double acc = 0.0;
    for (double v : a.value().raw()) acc += v;
    return make_op(Tensor::scalar(acc), {a}, [](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (auto& v : g->raw()) v += self.grad[0];
    });
}

Var mean(const Var& a)
{
    const double n = static_cast<double>(a.size());
    return scale(sum(a), 1.0 / n);
}

Var mean_cols(const Var& x)
{
    const int rows = x.value().rows(), cols = x.value().cols();
    Tensor out({rows});
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += x.value()[static_cast<std::size_t>(r) * cols + c];
        out[r] = acc / cols;
    }
    return make_op(std::move(out), {x}, [rows, cols](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (int r = 0; r < rows; ++r) {
                const double gr = self.grad[r] / cols;
                for (int c = 0; c < cols; ++c) (*g)[static_cast<std::size_t>(r) * cols + c] += gr;
            }
    });
}

Var matmul(const Var& a, const Var& b)
{
    const int m = a.value().rows(), kk = a.value().cols();
    const int n = b.value().cols();
    if (b.value().rows() != kk)
        throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    Tensor out({m, n});
    k::gemm(a.value().span(), b.value().span(), out.span(), m, kk, n);
    return make_op(std::move(out), {a, b}, [m, kk, n](Node& self) {
        if (Tensor* g = grad_of(self, 0)) k::gemm_nt(self.grad.span(), value_of(self, 1).span(), g->span(), m, n, kk);
        if (Tensor* g = grad_of(self, 1)) k::gemm_tn(value_of(self, 0).span(), self.grad.span(), g->span(), kk, m, n);
    });
}

Var transpose(const Var& a)
{
    const int m = a.value().rows(), n = a.value().cols();
    Tensor out({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.at(j, i) = a.value()[static_cast<std::size_t>(i) * n + j];
    return make_op(std::move(out), {a}, [m, n](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) (*g)[static_cast<std::size_t>(i) * n + j] += self.grad.at(j, i);
    });
}

Var linear(const Var& w, const Var& x, const Var& b)
{
    const int m = w.value().rows(), n = w.value().cols();
    if (static_cast<int>(x.size()) != n)
        throw ShapeError("linear: weight " + shape_str(w.shape()) + " with input " + shape_str(x.shape()));
    if (b && static_cast<int>(b.size()) != m)
        throw ShapeError("linear: weight " + shape_str(w.shape()) + " with bias " + shape_str(b.shape()));
    Tensor out({m});
    k::gemm(w.value().span(), x.value().span(), out.span(), m, n, 1);
    if (b)
        for (int i = 0; i < m; ++i) out[i] += b.value()[i];
    std::vector<Var> parents{w, x};
    if (b) parents.push_back(b);
    return make_op(std::move(out), std::move(parents), [m, n](Node& self) {
        const Tensor& wv = value_of(self, 0);
        const Tensor& xv = value_of(self, 1);
        if (Tensor* g = grad_of(self, 0))
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) (*g)[static_cast<std::size_t>(i) * n + j] += self.grad[i] * xv[j];
        if (Tensor* g = grad_of(self, 1))
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) (*g)[j] += wv[static_cast<std::size_t>(i) * n + j] * self.grad[i];
        if (self.parents.size() > 2)
            if (Tensor* g = grad_of(self, 2))
                for (int i = 0; i < m; ++i) (*g)[i] += self.grad[i];
    });
}

Var row(const Var& x, int i)
{
    const int rows = x.value().rows(), cols = x.value().cols();
    if (i < 0 || i >= rows) throw std::out_of_range("row index " + std::to_string(i));
    Tensor out({cols});
    std::copy_n(x.value().data() + static_cast<std::size_t>(i) * cols, cols, out.data());
    return make_op(std::move(out), {x}, [i, cols](Node& self) {
        if (Tensor* g = grad_of(self, 0))
            for (int c = 0; c < cols; ++c) (*g)[static_cast<std::size_t>(i) * cols + c] += self.grad[c];
    });
}

Var stack_rows(const std::vector<Var>& rows)
{
    if (rows.empty()) throw ShapeError("stack_rows: no rows");
    const int cols = static_cast<int>(rows[0].size());
    const int m = static_cast<int>(rows.size());
    Tensor out({m, cols});
    for (int r = 0; r < m; ++r) {
        if (static_cast<int>(rows[r].size()) != cols) throw ShapeError("stack_rows: ragged rows");
        std::copy_n(rows[r].value().data(), cols, out.data() + static_cast<std::size_t>(r) * cols);
    }
    return make_op(std::move(out), rows, [m, cols](Node& self) {
        for (int r = 0; r < m; ++r)
            if (Tensor* g = grad_of(self, r))
                for (int c = 0; c < cols; ++c) (*g)[c] += self.grad[static_cast<std::size_t>(r) * cols + c];
    });
}

Var concat(const std::vector<Var>& vectors)
{
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    for (const auto& v : vectors) {
        offsets.push_back(total);
        total += v.size();
    }
    Tensor out({static_cast<int>(total)});
    for (std::size_t i = 0; i < vectors.size(); ++i)
        std::copy_n(vectors[i].value().data(), vectors[i].size(), out.data() + offsets[i]);
    return make_op(std::move(out), vectors, [offsets](Node& self) {
        for (std::size_t p = 0; p < offsets.size(); ++p)
            if (Tensor* g = grad_of(self, p))
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[offsets[p] + i];
    });
}

Var hcat(const std::vector<Var>& mats)
{
    if (mats.empty()) throw ShapeError("hcat: no operands");
    const int rows = mats[0].value().rows();
    std::vector<int> widths, offsets;
    int total = 0;
    for (const auto& m : mats) {
        if (m.value().rows() != rows) throw ShapeError("hcat: row count mismatch");
        offsets.push_back(total);
        widths.push_back(m.value().cols());
        total += m.value().cols();
    }
    Tensor out({rows, total});
    for (std::size_t p = 0; p < mats.size(); ++p)
        for (int r = 0; r < rows; ++r)
            std::copy_n(mats[p].value().data() + static_cast<std::size_t>(r) * widths[p], widths[p],
                        out.data() + static_cast<std::size_t>(r) * total + offsets[p]);
    return make_op(std::move(out), mats, [rows, total, widths, offsets](Node& self) {
        for (std::size_t p = 0; p < widths.size(); ++p)
            if (Tensor* g = grad_of(self, p))
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < widths[p]; ++c)
                        (*g)[static_cast<std::size_t>(r) * widths[p] + c] +=
                            self.grad[static_cast<std::size_t>(r) * total + offsets[p] + c];
    });
}

Var index(const Var& v, int i)
{
    if (i < 0 || static_cast<std::size_t>(i) >= v.size()) throw std::out_of_range("index " + std::to_string(i));
    return make_op(Tensor::scalar(v.value()[i]), {v}, [i](Node& self) {
        if (Tensor* g = grad_of(self, 0)) (*g)[i] += self.grad[0];
    });
}

Var stack_scalars(const std::vector<Var>& scalars)
{
    Tensor out({static_cast<int>(scalars.size())});
    for (std::size_t i = 0; i < scalars.size(); ++i) out[i] = scalars[i].item();
    return make_op(std::move(out), scalars, [](Node& self) {
        for (std::size_t p = 0; p < self.parents.size(); ++p)
            if (Tensor* g = grad_of(self, p)) (*g)[0] += self.grad[p];
    });
}

Var dot(const Var& a, const Var& b)
{
    check_same(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.value()[i] * b.value()[i];
    return make_op(Tensor::scalar(acc), {a, b}, [](Node& self) {
        const Tensor& av = value_of(self, 0);
        const Tensor& bv = value_of(self, 1);
        if (Tensor* g = grad_of(self, 0))
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[0] * bv[i];
        if (Tensor* g = grad_of(self, 1))
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[0] * av[i];
    });
}

Var cosine(const Var& a, const Var& b)
{
    check_same(a, b, "cosine");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a.value()[i] * b.value()[i];
        aa += a.value()[i] * a.value()[i];
        bb += b.value()[i] * b.value()[i];
    }
    if (aa == 0.0 || bb == 0.0) throw ZeroNormError("cosine similarity of a zero-norm vector");
    const double na = std::sqrt(aa), nb = std::sqrt(bb);
    const double c = ab / (na * nb);
    return make_op(Tensor::scalar(c), {a, b}, [na, nb, c](Node& self) {
        const Tensor& av = value_of(self, 0);
        const Tensor& bv = value_of(self, 1);
        const double g0 = self.grad[0];
        if (Tensor* g = grad_of(self, 0))
            for (std::size_t i = 0; i < g->size(); ++i)
                (*g)[i] += g0 * (bv[i] / (na * nb) - c * av[i] / (na * na));
        if (Tensor* g = grad_of(self, 1))
            for (std::size_t i = 0; i < g->size(); ++i)
                (*g)[i] += g0 * (av[i] / (na * nb) - c * bv[i] / (nb * nb));
    });
}

namespace {

void softmax_inplace(double* v, int n)
{
    double mx = v[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, v[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        v[i] = std::exp(v[i] - mx);
        z += v[i];
    }
    for (int i = 0; i < n; ++i) v[i] /= z;
}

void softmax_backward(const double* y, const double* gy, double* gx, int n)
{
    double dotv = 0.0;
    for (int i = 0; i < n; ++i) dotv += gy[i] * y[i];
    for (int i = 0; i < n; ++i) gx[i] += y[i] * (gy[i] - dotv);
}

} // namespace

Var softmax(const Var& v)
{
    Tensor out = v.value();
    const int n = static_cast<int>(out.size());
    if (n == 0) throw ShapeError("softmax of empty vector");
    softmax_inplace(out.data(), n);
    return make_op(std::move(out), {v}, [n](Node& self) {
        if (Tensor* g = grad_of(self, 0)) softmax_backward(self.value.data(), self.grad.data(), g->data(), n);
    });
}

Var row_softmax(const Var& x)
{
    const int rows = x.value().rows(), cols = x.value().cols();
    Tensor out = x.value();
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * cols > (1L << 15))
    for (int r = 0; r < rows; ++r) softmax_inplace(out.data() + static_cast<std::size_t>(r) * cols, cols);
    return make_op(std::move(out), {x}, [rows, cols](Node& self) {
        if (Tensor* g = grad_of(self, 0)) {
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * cols > (1L << 15))
            for (int r = 0; r < rows; ++r) {
                const std::size_t off = static_cast<std::size_t>(r) * cols;
                softmax_backward(self.value.data() + off, self.grad.data() + off, g->data() + off, cols);
            }
        }
    });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad)
{
    if (x.value().rank() != 3 || w.value().rank() != 4)
        throw ShapeError("conv2d: input " + shape_str(x.shape()) + " weight " + shape_str(w.shape()));
    kernels::ConvGeometry g{x.value().dim(0), x.value().dim(1), x.value().dim(2), w.value().dim(2), stride, pad};
    const int out_ch = w.value().dim(0);
    if (w.value().dim(1) != g.channels || w.value().dim(3) != g.kernel)
        throw ShapeError("conv2d: input " + shape_str(x.shape()) + " weight " + shape_str(w.shape()));
    if (static_cast<int>(b.size()) != out_ch) throw ShapeError("conv2d: bias " + shape_str(b.shape()));
    const int rows = g.col_rows(), cols = g.col_cols();
    Tensor col({rows, cols});
    k::im2col(x.value().span(), g, col.span());
    Tensor out({out_ch, g.out_height(), g.out_width()});
    k::gemm(w.value().span(), col.span(), out.span(), out_ch, rows, cols);
    for (int o = 0; o < out_ch; ++o)
        for (int j = 0; j < cols; ++j) out[static_cast<std::size_t>(o) * cols + j] += b.value()[o];

    const bool need = x.requires_grad() || w.requires_grad() || b.requires_grad();
    if (!need) return constant(std::move(out));
    return make_op(std::move(out), {x, w, b}, [g, out_ch, rows, cols, col = std::move(col)](Node& self) {
        if (Tensor* gx = grad_of(self, 0)) {
            Tensor gcol({rows, cols});
            k::gemm_tn(value_of(self, 1).span(), self.grad.span(), gcol.span(), rows, out_ch, cols);
            k::col2im(gcol.span(), g, gx->span());
        }
        if (Tensor* gw = grad_of(self, 1)) k::gemm_nt(self.grad.span(), col.span(), gw->span(), out_ch, cols, rows);
        if (Tensor* gb = grad_of(self, 2))
            for (int o = 0; o < out_ch; ++o) {
                double acc = 0.0;
                for (int j = 0; j < cols; ++j) acc += self.grad[static_cast<std::size_t>(o) * cols + j];
                (*gb)[o] += acc;
            }
    });
}

Var upsample_nearest(const Var& x, int s)
{
    const Tensor& xv = x.value();
    const int c = xv.rank() == 3 ? xv.dim(0) : 1;
    const int h = xv.rank() == 3 ? xv.dim(1) : xv.dim(0);
    const int w = xv.rank() == 3 ? xv.dim(2) : xv.dim(1);
    Shape shape = xv.rank() == 3 ? Shape{c, h * s, w * s} : Shape{h * s, w * s};
    Tensor out(shape);
    k::upsample_nearest(xv.span(), out.span(), c, h, w, s);
    return make_op(std::move(out), {x}, [c, h, w, s](Node& self) {
        if (Tensor* g = grad_of(self, 0)) k::block_sum(self.grad.span(), g->span(), c, h, w, s);
    });
}

} // namespace ttvrs::ag
