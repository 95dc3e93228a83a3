#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

#include "sbcsim/net/packet.hpp"
#include "sbcsim/net/rng.hpp"
#include "sbcsim/net/time.hpp"
#include "sbcsim/net/trace.hpp"

namespace sbcsim::net {

/// What a node asked the simulator to do while handling one input. Actions are
/// applied in the order they were recorded.
struct Action {
    enum class Type { Emit, Forward, Drop, Observe, Timer, LinkDown };
    Type type = Type::Emit;
    int port = 0;
    FrameRef frame;
    std::string note;
    SimTime at;
    std::uint64_t token = 0;
};

class StepContext {
public:
    StepContext(SimTime now, Rng& rng) : now_(now), rng_(rng) {}

    SimTime now() const { return now_; }
    Rng& rng() { return rng_; }

    /// A frame this node created.
    void emit(int port, FrameRef frame) { push(Action::Type::Emit, port, std::move(frame)); }
    void emit(int port, EthernetFrame frame) { emit(port, WireFrame::make(std::move(frame))); }
    /// A received frame relayed unchanged.
    void forward(int port, FrameRef frame) { push(Action::Type::Forward, port, std::move(frame)); }
    void drop(int port, FrameRef frame, std::string why) {
        push(Action::Type::Drop, port, std::move(frame), std::move(why));
    }
    void observe(int port, FrameRef frame, std::string what) {
        push(Action::Type::Observe, port, std::move(frame), std::move(what));
    }
    void set_timer(SimTime at, std::uint64_t token) {
        auto& a = push(Action::Type::Timer, 0, nullptr);
        a.at = at;
        a.token = token;
    }
    /// Administratively disables the link attached to `port`.
    void link_down(int port) { push(Action::Type::LinkDown, port, nullptr); }

    const std::vector<Action>& actions() const { return actions_; }
    std::vector<Action> take_actions() { return std::move(actions_); }

private:
    Action& push(Action::Type type, int port, FrameRef frame, std::string note = {}) {
        Action a;
        a.type = type;
        a.port = port;
        a.frame = std::move(frame);
        a.note = std::move(note);
        actions_.push_back(std::move(a));
        return actions_.back();
    }

    SimTime now_;
    Rng& rng_;
    std::vector<Action> actions_;
};

/// Token-addressed one-shot callbacks owned by a node.
class TimerTable {
public:
    using Callback = std::function<void(StepContext&)>;

    void schedule(StepContext& ctx, SimTime at, Callback cb) {
        const auto token = next_++;
        pending_.emplace(token, std::move(cb));
        ctx.set_timer(at, token);
    }
    /// Runs and forgets the callback; unknown tokens are ignored.
    void fire(StepContext& ctx, std::uint64_t token) {
        auto it = pending_.find(token);
        if (it == pending_.end()) return;
        auto cb = std::move(it->second);
        pending_.erase(it);
        cb(ctx);
    }

private:
    std::uint64_t next_ = 1;
    std::map<std::uint64_t, Callback> pending_;
};

class Node {
public:
    explicit Node(std::string name) : name_(std::move(name)) {}
    virtual ~Node() = default;
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    const std::string& name() const { return name_; }
    virtual int port_count() const = 0;

    virtual void on_start(StepContext&) {}
    virtual void on_frame(StepContext& ctx, int port, const FrameRef& frame) = 0;
    virtual void on_timer(StepContext&, std::uint64_t) {}
    virtual void on_link_down(StepContext&, int) {}
    virtual void on_finish(SimTime) {}

private:
    std::string name_;
};

struct LinkSpec {
    std::size_t a_node = 0;
    int a_port = 0;
    std::size_t b_node = 0;
    int b_port = 0;
    SimDuration latency{100};
};

/// Single-threaded discrete-event engine. Events are processed in (time, seq)
/// order, where seq is a global counter assigned when the event is queued.
class Simulator {
public:
    explicit Simulator(std::uint64_t seed) : seed_(seed) {}

    std::size_t add_node(std::unique_ptr<Node> node);
    void connect(const LinkSpec& link);

    Node& node(std::size_t i) { return *nodes_.at(i).node; }
    std::optional<std::size_t> find(const std::string& name) const;
    template <typename T>
    T* get(const std::string& name) {
        auto i = find(name);
        return i ? dynamic_cast<T*>(nodes_[*i].node.get()) : nullptr;
    }

    /// Runs until the queue is empty or the next event lies beyond `end`
    /// (events at exactly `end` are processed).
    void run(SimTime end);

    const EventTrace& trace() const { return trace_; }
    EventTrace take_trace() { return std::move(trace_); }

private:
    struct Attachment {
        std::size_t link = 0;
        bool side_a = true;
    };
    struct NodeSlot {
        std::unique_ptr<Node> node;
        std::vector<std::optional<Attachment>> ports;
        Rng rng;
    };
    struct Link {
        LinkSpec spec;
        bool up = true;
    };
    struct Arrival {
        std::size_t link;
        std::size_t node;
        int port;
        FrameRef frame;
    };
    struct TimerFire {
        std::size_t node;
        std::uint64_t token;
    };
    struct LinkDownNotice {
        std::size_t node;
        int port;
    };
    struct Start {
        std::size_t node;
    };
    using Payload = std::variant<Arrival, TimerFire, LinkDownNotice, Start>;
    struct Event {
        SimTime time;
        std::uint64_t seq;
        Payload payload;
        bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
    };

    void push(SimTime t, Payload p);
    void record(SimTime t, EventKind kind, std::size_t node, int port, FrameRef frame, std::string note);
    void apply(std::size_t node, StepContext& ctx);

    std::uint64_t seed_;
    std::vector<NodeSlot> nodes_;
    std::vector<Link> links_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t trace_seq_ = 0;
    EventTrace trace_;
    bool started_ = false;
};

}  // namespace sbcsim::net
