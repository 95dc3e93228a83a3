#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sbcsim/net/sim.hpp"

namespace sbcsim::net {

enum class ViolationAction { Alert, Shutdown };

struct PortPolicy {
    std::size_t max_macs = 1;
    ViolationAction action = ViolationAction::Shutdown;
    // First-learned MACs become the permanent allowed set.
    bool sticky = false;
};

struct PortVerdict {
    bool permit = true;
    ViolationAction action = ViolationAction::Alert;
};

struct PortViolation {
    SimTime time;
    int port = 0;
    MacAddr mac;
    ViolationAction action = ViolationAction::Alert;
};

struct FdbEntry {
    int port = 0;
    SimTime last_seen;
};

struct SwitchStep {
    std::vector<int> out_ports;
    std::optional<PortViolation> violation;
    // Set when the ingress frame was discarded (port shut or policy shutdown).
    std::optional<std::string> dropped;
};

/// Learning-bridge state machine; the simulation node wraps it.
class SwitchCore {
public:
    explicit SwitchCore(int ports) : ports_(ports), shutdown_(static_cast<std::size_t>(ports), false) {}

    int port_count() const { return ports_; }
    void set_policy(int port, PortPolicy p);
    const std::optional<PortPolicy>& policy(int port) const;

    /// Evaluated before learning. Records the source MAC against the port's
    /// allowance when permitted.
    PortVerdict port_security_check(const EthernetFrame& frame, int in_port);

    SwitchStep step(const EthernetFrame& frame, int in_port, SimTime now);

    const std::map<MacAddr, FdbEntry>& fdb() const { return fdb_; }
    bool is_shutdown(int port) const { return shutdown_.at(static_cast<std::size_t>(port)); }
    const std::vector<PortViolation>& violations() const { return violations_; }

private:
    int ports_;
    std::map<MacAddr, FdbEntry> fdb_;
    std::map<int, std::optional<PortPolicy>> policies_;
    std::map<int, std::set<MacAddr>> secured_;
    std::vector<bool> shutdown_;
    std::vector<PortViolation> violations_;
};

class Switch : public Node {
public:
    Switch(std::string name, int ports) : Node(std::move(name)), core_(ports) {}

    int port_count() const override { return core_.port_count(); }
    void on_frame(StepContext& ctx, int port, const FrameRef& frame) override;

    SwitchCore& core() { return core_; }
    const SwitchCore& core() const { return core_; }

private:
    SwitchCore core_;
};

}  // namespace sbcsim::net
