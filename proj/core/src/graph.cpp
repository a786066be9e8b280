#include "stylerl/graph.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stylerl {

Tape::Node* Tape::make(Mat val) {
    nodes_.push_back(Node{val, Mat(val.rows, val.cols), {}});
    return &nodes_.back();
}

Tape::Node* Tape::leaf(Mat v) { return make(std::move(v)); }

Tape::Node* Tape::add(Node* a, Node* b) {
    assert(a->val.same_shape(b->val));
    Mat v = a->val;
    for (size_t i = 0; i < v.a.size(); ++i) v.a[i] += b->val.a[i];
    Node* n = make(std::move(v));
    n->back = [a, b](Node* self) {
        for (size_t i = 0; i < self->grad.a.size(); ++i) {
            a->grad.a[i] += self->grad.a[i];
            b->grad.a[i] += self->grad.a[i];
        }
    };
    return n;
}

Tape::Node* Tape::add_rowvec(Node* a, Node* row) {
    assert(row->val.rows == 1 && row->val.cols == a->val.cols);
    Mat v = a->val;
    for (int r = 0; r < v.rows; ++r)
        for (int c = 0; c < v.cols; ++c) v.at(r, c) += row->val.at(0, c);
    Node* n = make(std::move(v));
    n->back = [a, row](Node* self) {
        for (int r = 0; r < self->grad.rows; ++r)
            for (int c = 0; c < self->grad.cols; ++c) {
                a->grad.at(r, c) += self->grad.at(r, c);
                row->grad.at(0, c) += self->grad.at(r, c);
            }
    };
    return n;
}

Tape::Node* Tape::mul_rowvec(Node* a, Node* row) {
    assert(row->val.rows == 1 && row->val.cols == a->val.cols);
    Mat v = a->val;
    for (int r = 0; r < v.rows; ++r)
        for (int c = 0; c < v.cols; ++c) v.at(r, c) *= row->val.at(0, c);
    Node* n = make(std::move(v));
    n->back = [a, row](Node* self) {
        for (int r = 0; r < self->grad.rows; ++r)
            for (int c = 0; c < self->grad.cols; ++c) {
                double g = self->grad.at(r, c);
                a->grad.at(r, c) += g * row->val.at(0, c);
                row->grad.at(0, c) += g * a->val.at(r, c);
            }
    };
    return n;
}

Tape::Node* Tape::matmul(Node* a, Node* b) {
    Mat v(a->val.rows, b->val.cols);
    stylerl::matmul(a->val, b->val, v);
    Node* n = make(std::move(v));
    n->back = [a, b](Node* self) {
        stylerl::matmul_nt_acc(self->grad, b->val, a->grad);  // dA += dC·Bᵀ
        stylerl::matmul_tn_acc(a->val, self->grad, b->grad);  // dB += Aᵀ·dC
    };
    return n;
}

Tape::Node* Tape::matmul_nt(Node* a, Node* b) {
    Mat v(a->val.rows, b->val.rows);
    stylerl::matmul_nt(a->val, b->val, v);
    Node* n = make(std::move(v));
    n->back = [a, b](Node* self) {
        stylerl::matmul_acc(self->grad, b->val, a->grad);     // dA += dC·B
        stylerl::matmul_tn_acc(self->grad, a->val, b->grad);  // dB += dCᵀ·A
    };
    return n;
}

Tape::Node* Tape::scale(Node* a, double s) {
    Mat v = a->val;
    for (auto& x : v.a) x *= s;
    Node* n = make(std::move(v));
    n->back = [a, s](Node* self) {
        for (size_t i = 0; i < self->grad.a.size(); ++i)
            a->grad.a[i] += s * self->grad.a[i];
    };
    return n;
}

Tape::Node* Tape::softmax_rows(Node* a, bool causal) {
    if (causal && a->val.rows != a->val.cols)
        throw std::logic_error("causal softmax needs a square matrix");
    Mat v(a->val.rows, a->val.cols);
    for (int r = 0; r < v.rows; ++r) {
        int limit = causal ? r + 1 : v.cols;
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < limit; ++c) mx = std::max(mx, a->val.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < limit; ++c) {
            double e = std::exp(a->val.at(r, c) - mx);
            v.at(r, c) = e;
            sum += e;
        }
        for (int c = 0; c < limit; ++c) v.at(r, c) /= sum;
        for (int c = limit; c < v.cols; ++c) v.at(r, c) = 0.0;
    }
    Node* n = make(std::move(v));
    n->back = [a, causal](Node* self) {
        for (int r = 0; r < self->val.rows; ++r) {
            int limit = causal ? r + 1 : self->val.cols;
            double dot = 0.0;
            for (int c = 0; c < limit; ++c)
                dot += self->grad.at(r, c) * self->val.at(r, c);
            for (int c = 0; c < limit; ++c)
                a->grad.at(r, c) +=
                    self->val.at(r, c) * (self->grad.at(r, c) - dot);
        }
    };
    return n;
}

Tape::Node* Tape::layernorm(Node* a, double eps) {
    Mat v(a->val.rows, a->val.cols);
    const int C = v.cols;
    std::vector<double> inv_sd(size_t(v.rows));
    for (int r = 0; r < v.rows; ++r) {
        double mu = 0.0;
        for (int c = 0; c < C; ++c) mu += a->val.at(r, c);
        mu /= C;
        double var = 0.0;
        for (int c = 0; c < C; ++c) {
            double d = a->val.at(r, c) - mu;
            var += d * d;
        }
        var /= C;
        double is = 1.0 / std::sqrt(var + eps);
        inv_sd[size_t(r)] = is;
        for (int c = 0; c < C; ++c) v.at(r, c) = (a->val.at(r, c) - mu) * is;
    }
    Node* n = make(std::move(v));
    n->back = [a, inv_sd = std::move(inv_sd)](Node* self) {
        const int C = self->val.cols;
        for (int r = 0; r < self->val.rows; ++r) {
            double mean_dy = 0.0, mean_dyy = 0.0;
            for (int c = 0; c < C; ++c) {
                mean_dy += self->grad.at(r, c);
                mean_dyy += self->grad.at(r, c) * self->val.at(r, c);
            }
            mean_dy /= C;
            mean_dyy /= C;
            for (int c = 0; c < C; ++c)
                a->grad.at(r, c) += inv_sd[size_t(r)] *
                                    (self->grad.at(r, c) - mean_dy -
                                     self->val.at(r, c) * mean_dyy);
        }
    };
    return n;
}

Tape::Node* Tape::gelu(Node* a) {
    Mat v = a->val;
    for (auto& x : v.a) x = 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
    Node* n = make(std::move(v));
    n->back = [a](Node* self) {
        constexpr double inv_sqrt_2pi = 0.3989422804014326779;
        for (size_t i = 0; i < self->grad.a.size(); ++i) {
            double x = a->val.a[i];
            double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
            double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
            a->grad.a[i] += self->grad.a[i] * (cdf + x * pdf);
        }
    };
    return n;
}

Tape::Node* Tape::rows_gather(Node* table, std::vector<int> ids) {
    Mat v(int(ids.size()), table->val.cols);
    for (size_t r = 0; r < ids.size(); ++r) {
        assert(ids[r] >= 0 && ids[r] < table->val.rows);
        const double* src = table->val.row(ids[r]);
        std::copy(src, src + table->val.cols, v.row(int(r)));
    }
    Node* n = make(std::move(v));
    n->back = [table, ids = std::move(ids)](Node* self) {
        for (size_t r = 0; r < ids.size(); ++r) {
            auto dst = table->grad.row(ids[r]);
            auto src = self->grad.row(int(r));
            for (int c = 0; c < self->grad.cols; ++c) dst[size_t(c)] += src[size_t(c)];
        }
    };
    return n;
}

Tape::Node* Tape::slice_rows(Node* a, int r0, int r1) {
    assert(0 <= r0 && r0 < r1 && r1 <= a->val.rows);
    Mat v(r1 - r0, a->val.cols);
    for (int r = r0; r < r1; ++r) {
        const double* src = a->val.row(r);
        std::copy(src, src + a->val.cols, v.row(r - r0));
    }
    Node* n = make(std::move(v));
    n->back = [a, r0](Node* self) {
        for (int r = 0; r < self->grad.rows; ++r)
            for (int c = 0; c < self->grad.cols; ++c)
                a->grad.at(r + r0, c) += self->grad.at(r, c);
    };
    return n;
}

Tape::Node* Tape::slice_cols(Node* a, int c0, int c1) {
    assert(0 <= c0 && c0 < c1 && c1 <= a->val.cols);
    Mat v(a->val.rows, c1 - c0);
    for (int r = 0; r < v.rows; ++r)
        for (int c = c0; c < c1; ++c) v.at(r, c - c0) = a->val.at(r, c);
    Node* n = make(std::move(v));
    n->back = [a, c0](Node* self) {
        for (int r = 0; r < self->grad.rows; ++r)
            for (int c = 0; c < self->grad.cols; ++c)
                a->grad.at(r, c + c0) += self->grad.at(r, c);
    };
    return n;
}

Tape::Node* Tape::concat_cols(const std::vector<Node*>& parts) {
    assert(!parts.empty());
    int rows = parts[0]->val.rows, cols = 0;
    for (auto* p : parts) {
        assert(p->val.rows == rows);
        cols += p->val.cols;
    }
    Mat v(rows, cols);
    int off = 0;
    for (auto* p : parts) {
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < p->val.cols; ++c) v.at(r, off + c) = p->val.at(r, c);
        off += p->val.cols;
    }
    Node* n = make(std::move(v));
    n->back = [parts](Node* self) {
        int off = 0;
        for (auto* p : parts) {
            for (int r = 0; r < self->grad.rows; ++r)
                for (int c = 0; c < p->val.cols; ++c)
                    p->grad.at(r, c) += self->grad.at(r, off + c);
            off += p->val.cols;
        }
    };
    return n;
}

Tape::Node* Tape::concat_rows(const std::vector<Node*>& parts) {
    assert(!parts.empty());
    int cols = parts[0]->val.cols, rows = 0;
    for (auto* p : parts) {
        assert(p->val.cols == cols);
        rows += p->val.rows;
    }
    Mat v(rows, cols);
    int off = 0;
    for (auto* p : parts) {
        std::copy(p->val.a.begin(), p->val.a.end(),
                  v.a.begin() + size_t(off) * size_t(cols));
        off += p->val.rows;
    }
    Node* n = make(std::move(v));
    n->back = [parts](Node* self) {
        int off = 0;
        for (auto* p : parts) {
            for (int r = 0; r < p->grad.rows; ++r)
                for (int c = 0; c < p->grad.cols; ++c)
                    p->grad.at(r, c) += self->grad.at(off + r, c);
            off += p->grad.rows;
        }
    };
    return n;
}

Tape::Node* Tape::weighted_nll(Node* logits, std::vector<int> targets,
                               std::vector<double> weights) {
    assert(int(targets.size()) == logits->val.rows);
    assert(targets.size() == weights.size());
    const int V = logits->val.cols;
    Mat probs(logits->val.rows, V);
    double loss = 0.0;
    for (int r = 0; r < logits->val.rows; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < V; ++c) mx = std::max(mx, logits->val.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < V; ++c) {
            double e = std::exp(logits->val.at(r, c) - mx);
            probs.at(r, c) = e;
            sum += e;
        }
        for (int c = 0; c < V; ++c) probs.at(r, c) /= sum;
        if (weights[size_t(r)] != 0.0) {
            int y = targets[size_t(r)];
            assert(y >= 0 && y < V);
            loss -= weights[size_t(r)] * std::log(probs.at(r, y));
        }
    }
    Mat v(1, 1);
    v.at(0, 0) = loss;
    Node* n = make(std::move(v));
    n->back = [logits, probs = std::move(probs), targets = std::move(targets),
               weights = std::move(weights)](Node* self) {
        double g = self->grad.at(0, 0);
        for (int r = 0; r < probs.rows; ++r) {
            double w = weights[size_t(r)];
            if (w == 0.0) continue;
            for (int c = 0; c < probs.cols; ++c)
                logits->grad.at(r, c) += g * w * probs.at(r, c);
            logits->grad.at(r, targets[size_t(r)]) -= g * w;
        }
    };
    return n;
}

void Tape::backward(Node* root) {
    if (root->val.rows != 1 || root->val.cols != 1)
        throw std::logic_error("backward root must be a scalar");
    root->grad.at(0, 0) = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
        if (it->back) it->back(&*it);
}

}  // namespace stylerl
