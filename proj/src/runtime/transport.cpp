#include <algorithm>
#include <boost/asio.hpp>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <sstream>
#include <thread>

#include "cbmuc/runtime.hpp"

namespace cbmuc {

namespace asio = boost::asio;
using asio::ip::tcp;

const char* to_string(MessageKind kind) {
    switch (kind) {
    case MessageKind::ThetaShare: return "THETA_SHARE";
    case MessageKind::ViolationShare: return "VIOLATION_SHARE";
    case MessageKind::UboundShare: return "UBOUND_SHARE";
    case MessageKind::ConvFlag: return "CONV_FLAG";
    }
    return "?";
}

MessageKind parse_message_kind(std::string_view text) {
    for (MessageKind k : {MessageKind::ThetaShare, MessageKind::ViolationShare, MessageKind::UboundShare,
                          MessageKind::ConvFlag})
        if (text == to_string(k)) return k;
    throw RuntimeError("unknown message kind '" + std::string(text) + "'");
}

std::string encode_message(const Message& m) {
    std::string out = "v1 " + std::to_string(m.round) + " " + m.phase + " " + std::to_string(m.sender) + " " +
                      std::to_string(m.receiver) + " " + to_string(m.kind) + "\n";
    char buf[64];
    for (const auto& [key, value] : m.rows) {
        std::snprintf(buf, sizeof buf, "%.17g", value);
        out += key;
        out += '=';
        out += buf;
        out += '\n';
    }
    return out;
}

Message decode_message(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw RuntimeError("empty message");
    std::istringstream head(line);
    std::string version, kind;
    Message m;
    if (!(head >> version >> m.round >> m.phase >> m.sender >> m.receiver >> kind) || version != "v1")
        throw RuntimeError("malformed message header '" + line + "'");
    m.kind = parse_message_kind(kind);
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) throw RuntimeError("malformed message row '" + line + "'");
        std::string value = line.substr(eq + 1);
        char* end = nullptr;
        double v = std::strtod(value.c_str(), &end);
        if (value.empty() || *end != '\0') throw RuntimeError("malformed message value '" + line + "'");
        m.rows.emplace_back(line.substr(0, eq), v);
    }
    return m;
}

std::string frame_message(const std::string& payload) { return std::to_string(payload.size()) + "\n" + payload; }

// ---- trace ----------------------------------------------------------------

Trace::Trace() : start_(std::chrono::steady_clock::now()) {}

void Trace::message(const std::string& encoded) {
    std::lock_guard<std::mutex> lock(mu_);
    messages_.push_back(encoded);
}

void Trace::event(int region, int round, const std::string& phase, const std::string& what) {
    std::lock_guard<std::mutex> lock(mu_);
    double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    events_.push_back({t, region, round, phase, what});
}

std::vector<std::string> Trace::messages() const {
    std::lock_guard<std::mutex> lock(mu_);
    return messages_;
}

std::vector<TraceEvent> Trace::events() const {
    std::lock_guard<std::mutex> lock(mu_);
    return events_;
}

bool barrier_respected(const std::vector<TraceEvent>& events) {
    std::map<int, double> last_end, first_begin;
    for (const TraceEvent& e : events) {
        if (e.what == "end") {
            auto it = last_end.find(e.round);
            last_end[e.round] = it == last_end.end() ? e.time : std::max(it->second, e.time);
        } else if (e.what == "begin") {
            auto it = first_begin.find(e.round);
            first_begin[e.round] = it == first_begin.end() ? e.time : std::min(it->second, e.time);
        }
    }
    for (const auto& [round, end] : last_end) {
        auto next = first_begin.find(round + 1);
        if (next != first_begin.end() && next->second < end) return false;
    }
    return true;
}

// ---- transport ------------------------------------------------------------

Transport::Transport(std::vector<int> regions, double timeout_seconds, Trace* trace)
    : regions_(std::move(regions)), timeout_(timeout_seconds), trace_(trace) {
    for (int r : regions_) inbox_[r];
}

Transport::~Transport() = default;

void Transport::send(const Message& m) {
    if (!inbox_.count(m.receiver) || !inbox_.count(m.sender) || m.sender == m.receiver)
        throw RuntimeError("invalid channel " + std::to_string(m.sender) + " -> " + std::to_string(m.receiver));
    std::string payload = encode_message(m);
    if (trace_) trace_->message(payload);
    transmit(m.sender, m.receiver, payload);
}

void Transport::deliver(const std::string& payload) {
    Message m = decode_message(payload);
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(m.sender, m.receiver, static_cast<int>(m.kind));
        auto it = last_round_.find(key);
        if (it != last_round_.end() && m.round <= it->second) {
            abort_reason_ = "round not increasing on channel " + std::to_string(m.sender) + " -> " +
                            std::to_string(m.receiver) + " " + to_string(m.kind);
        } else {
            last_round_[key] = m.round;
            inbox_.at(m.receiver).push_back(std::move(m));
            ++delivered_;
        }
    }
    cv_.notify_all();
}

Message Transport::receive(int receiver, int sender, MessageKind kind, int round) {
    std::unique_lock<std::mutex> lock(mu_);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_);
    auto& box = inbox_.at(receiver);
    for (;;) {
        if (!abort_reason_.empty()) throw RuntimeError("run aborted: " + abort_reason_);
        for (auto it = box.begin(); it != box.end(); ++it)
            if (it->sender == sender && it->kind == kind && it->round == round) {
                Message m = std::move(*it);
                box.erase(it);
                return m;
            }
        if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) {
            std::string what = std::string("no ") + to_string(kind) + " from region " + std::to_string(sender) +
                               " to region " + std::to_string(receiver) + " in round " + std::to_string(round);
            abort_reason_ = what;
            cv_.notify_all();
            throw DeadlockError("deadlock detector: " + what);
        }
    }
}

void Transport::abort(const std::string& reason) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (abort_reason_.empty()) abort_reason_ = reason;
    }
    cv_.notify_all();
}

std::int64_t Transport::delivered() const {
    std::lock_guard<std::mutex> lock(mu_);
    return delivered_;
}

namespace {

class InProcessTransport : public Transport {
public:
    using Transport::Transport;

protected:
    void transmit(int, int, const std::string& payload) override { deliver(payload); }
};

// One loopback TCP connection per ordered region pair; a reader thread per
// incoming connection decodes frames into the receiver's inbox.
class SocketTransport : public Transport {
public:
    SocketTransport(const std::vector<int>& regions, double timeout, Trace* trace)
        : Transport(regions, timeout, trace) {
        std::map<int, std::unique_ptr<tcp::acceptor>> acceptors;
        for (int r : regions) {
            auto a = std::make_unique<tcp::acceptor>(io_, tcp::endpoint(asio::ip::address_v4::loopback(), 0));
            acceptors[r] = std::move(a);
        }
        for (int s : regions)
            for (int r : regions) {
                if (s == r) continue;
                auto sock = std::make_unique<tcp::socket>(io_);
                sock->connect(acceptors.at(r)->local_endpoint());
                sock->set_option(tcp::no_delay(true));
                out_[{s, r}] = std::move(sock);
                out_mu_[{s, r}] = std::make_unique<std::mutex>();
            }
        for (int r : regions)
            for (std::size_t k = 0; k + 1 < regions.size(); ++k) {
                auto sock = std::make_shared<tcp::socket>(io_);
                acceptors.at(r)->accept(*sock);
                in_.push_back(sock);
                readers_.emplace_back([this, sock] { read_loop(sock); });
            }
    }

    ~SocketTransport() override {
        for (auto& [key, sock] : out_) {
            boost::system::error_code ec;
            sock->shutdown(tcp::socket::shutdown_both, ec);
            sock->close(ec);
        }
        for (auto& t : readers_) t.join();
    }

protected:
    void transmit(int sender, int receiver, const std::string& payload) override {
        std::string bytes = frame_message(payload);
        std::lock_guard<std::mutex> lock(*out_mu_.at({sender, receiver}));
        asio::write(*out_.at({sender, receiver}), asio::buffer(bytes));
    }

private:
    void read_loop(std::shared_ptr<tcp::socket> sock) {
        asio::streambuf buf;
        boost::system::error_code ec;
        for (;;) {
            std::size_t n = asio::read_until(*sock, buf, '\n', ec);
            if (ec) return;
            std::string len_line(asio::buffers_begin(buf.data()), asio::buffers_begin(buf.data()) + n - 1);
            buf.consume(n);
            std::size_t len = std::stoul(len_line);
            if (buf.size() < len) asio::read(*sock, buf, asio::transfer_exactly(len - buf.size()), ec);
            if (ec) return;
            std::string payload(asio::buffers_begin(buf.data()), asio::buffers_begin(buf.data()) + len);
            buf.consume(len);
            try {
                deliver(payload);
            } catch (const std::exception& e) {
                abort(std::string("undecodable frame: ") + e.what());
                return;
            }
        }
    }

    asio::io_context io_;
    std::map<std::pair<int, int>, std::unique_ptr<tcp::socket>> out_;
    std::map<std::pair<int, int>, std::unique_ptr<std::mutex>> out_mu_;
    std::vector<std::shared_ptr<tcp::socket>> in_;
    std::vector<std::thread> readers_;
};

}  // namespace

std::unique_ptr<Transport> make_transport(TransportKind kind, const std::vector<int>& regions,
                                          double timeout_seconds, Trace* trace) {
    if (kind == TransportKind::Socket) return std::make_unique<SocketTransport>(regions, timeout_seconds, trace);
    return std::make_unique<InProcessTransport>(regions, timeout_seconds, trace);
}

// ---- worker pool ----------------------------------------------------------

struct WorkerPool::Impl {
    explicit Impl(int n) : pool(static_cast<std::size_t>(n)) {}
    asio::thread_pool pool;
};

WorkerPool::WorkerPool(int threads) : threads_(std::max(1, threads)) {
    impl_ = std::make_unique<Impl>(threads_);
}

WorkerPool::~WorkerPool() { impl_->pool.join(); }

void WorkerPool::run_all(const std::vector<std::function<void()>>& tasks) {
    std::vector<std::future<void>> done;
    for (const auto& task : tasks) {
        auto job = std::make_shared<std::packaged_task<void()>>(task);
        done.push_back(job->get_future());
        asio::post(impl_->pool, [job] { (*job)(); });
    }
    for (auto& f : done) f.wait();
    for (auto& f : done) f.get();
}

}  // namespace cbmuc
