#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "stylerl/mat.hpp"

namespace stylerl {

// Reverse-mode tape over Mat. Nodes are created in topological order, so
// backward() just walks the tape in reverse. One tape per training example;
// parameter gradients are read off the leaf nodes afterwards.
class Tape {
public:
    struct Node {
        Mat val;
        Mat grad;
        std::function<void(Node*)> back;  // empty for leaves
    };

    Node* leaf(Mat v);
    Node* add(Node* a, Node* b);
    Node* add_rowvec(Node* a, Node* row);
    Node* mul_rowvec(Node* a, Node* row);
    Node* matmul(Node* a, Node* b);     // A·B
    Node* matmul_nt(Node* a, Node* b);  // A·Bᵀ
    Node* scale(Node* a, double s);
    // Row-wise softmax. When causal, row i only sees columns j ≤ i (requires
    // a square input).
    Node* softmax_rows(Node* a, bool causal);
    Node* layernorm(Node* a, double eps);
    Node* gelu(Node* a);
    Node* rows_gather(Node* table, std::vector<int> ids);
    Node* slice_rows(Node* a, int r0, int r1);
    Node* slice_cols(Node* a, int c0, int c1);
    Node* concat_cols(const std::vector<Node*>& parts);
    Node* concat_rows(const std::vector<Node*>& parts);
    // loss = Σ_t weights[t] · (−log softmax(logits_t)[targets[t]]). Rows with
    // zero weight are skipped; their target may be -1.
    Node* weighted_nll(Node* logits, std::vector<int> targets,
                       std::vector<double> weights);

    void backward(Node* root);

private:
    std::deque<Node> nodes_;
    Node* make(Mat val);
};

}  // namespace stylerl
