#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tsclean/frame.hpp"

namespace tsclean {

/// What an operator may look at besides the frame itself. Masks that are
/// empty (0 x 0) permit nothing.
struct OperatorContext {
    const ConstraintSet* constraints = nullptr;
    CellMask outlier;
    CellMask violation;
};

struct ApplyResult {
    TimeSeriesFrame frame;
    std::size_t cells_changed = 0;
    std::vector<std::string> warnings;
};

/// Proposes a repaired frame. The registry discards any change outside the
/// operator's permitted cells, so implementations may be sloppy about that.
using ApplyFn = std::function<TimeSeriesFrame(const TimeSeriesFrame& frame, const OperatorContext& ctx,
                                              const ParamMap& params, std::vector<std::string>& warnings)>;

class OperatorRegistry {
public:
    /// The default library: 20 imputers, 18 outlier repairs, 10 constraint repairs.
    static OperatorRegistry with_defaults();
    /// Shared frozen instance of with_defaults().
    static const OperatorRegistry& defaults();

    /// Appends; throws std::invalid_argument on a duplicate id.
    void register_op(const OperatorDescriptor& descriptor, ApplyFn fn);

    const std::vector<OperatorDescriptor>& list(IssueCategory category) const;
    std::size_t size() const { return entries_.size(); }
    bool contains(const std::string& id) const { return entries_.count(id) != 0; }
    /// Throws std::out_of_range naming the id when unknown.
    const OperatorDescriptor& descriptor(const std::string& id) const;

    /// Keeps only the given ids (in the given order within each category).
    OperatorRegistry subset(const std::vector<std::string>& ids) const;

    /// Runs the operator on a copy of `frame` and enforces the category mask:
    /// M may only fill Missing cells, O may only touch outlier-mask cells,
    /// C only violation-mask cells; O and C never write Missing. A throwing
    /// operator degrades to the identity with a warning.
    ApplyResult apply(const OperatorDescriptor& op, const TimeSeriesFrame& frame, const OperatorContext& ctx) const;

private:
    struct Entry {
        OperatorDescriptor descriptor;
        ApplyFn fn;
    };
    std::map<std::string, Entry> entries_;
    std::vector<OperatorDescriptor> by_category_[3];
};

/// Period with the highest autocorrelation over lags 2..T/2, or 0 when no lag
/// reaches 0.3.
std::size_t detect_period(const std::vector<Cell>& column);

}  // namespace tsclean
