#include "qkd/qstate.hpp"

#include "qkd/errors.hpp"

namespace qkd::serial {

// Reference kernel, deliberately written the naive way: for every amplitude
// index, sum over the sub-block column. O(dim * 2^k) like the production
// kernel but with no index tricks, so the two can cross-check each other.
void apply_unitary_inplace(StateVector& state, const Eigen::MatrixXcd& u,
                           std::span<const std::size_t> targets) {
    const std::size_t k = targets.size();
    const std::size_t dsub = std::size_t{1} << k;
    if (static_cast<std::size_t>(u.rows()) != dsub || static_cast<std::size_t>(u.cols()) != dsub)
        throw InputError("unitary dimension does not match target count");
    if (k == 0)
        return;

    const std::size_t nq = state.num_qubits();
    std::vector<cplx> next(state.dim(), cplx{0.0, 0.0});
    for (std::size_t idx = 0; idx < state.dim(); ++idx) {
        // Row of u seen by this amplitude: target t contributes bit (k-1-t).
        std::size_t row = 0;
        for (std::size_t t = 0; t < k; ++t)
            if ((idx >> (nq - 1 - targets[t])) & 1)
                row |= std::size_t{1} << (k - 1 - t);
        cplx acc{0.0, 0.0};
        for (std::size_t col = 0; col < dsub; ++col) {
            std::size_t src = idx;
            for (std::size_t t = 0; t < k; ++t) {
                const std::size_t p = nq - 1 - targets[t];
                if ((col >> (k - 1 - t)) & 1)
                    src |= std::size_t{1} << p;
                else
                    src &= ~(std::size_t{1} << p);
            }
            acc += u(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) *
                   state.amp(src);
        }
        next[idx] = acc;
    }
    state.amps() = std::move(next);
}

} // namespace qkd::serial
