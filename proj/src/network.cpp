#include "mcsim/network.hpp"

#include <cmath>
#include <memory>

#include "mcsim/radio.hpp"
#include "mcsim/traffic.hpp"

namespace mcsim {

namespace {

struct UeState {
  UeState(const ScenarioConfig& cfg, std::uint64_t seed, int idx)
      : traffic(cfg.traffic, RngStream(seed, "ue" + std::to_string(idx) + "/traffic")),
        tracker(cfg.traffic.d_qos, cfg.warmup),
        splitting_rng(seed, "ue" + std::to_string(idx) + "/splitting"),
        queue(cfg.dbtb),
        rx(cfg.t_reordering) {}

  double distance_m = 0.0;
  FrameSource traffic;
  FrameTracker tracker;
  Seq next_seq = 0;
  RateEstimates est;
  double c_est = 0.0;
  bool have_c_est = false;
  RngStream splitting_rng;

  StreamQueue queue;
  EventId queue_timer{};
  Time queue_timer_at = -1.0;

  UeReceiver rx;
  EventId rx_timer{};
  Time rx_timer_at = -1.0;

  // Xn acknowledgements produced in the current instant, flushed as one message.
  std::shared_ptr<std::vector<Seq>> ack_batch;
  Time ack_batch_at = -1.0;

  std::uint64_t dbtb_pdus = 0;
  std::uint64_t dbtb_acked = 0;
  std::uint64_t dbtb_to_fr1 = 0;
  std::uint64_t packets_generated = 0;
};

class Cell {
 public:
  Cell(const ScenarioConfig& cfg, const RunSpec& spec)
      : cfg_(cfg),
        spec_(spec),
        fr1_(sim_, LinkKind::fr1, cfg.fr1, spec.seed,
             GnbHooks{[this](int ue, const PdcpPdu& p, Time t) { on_delivered(LinkKind::fr1, ue, p, t); },
                      {}}),
        fr2_(sim_, LinkKind::fr2, cfg.fr2, spec.seed,
             GnbHooks{[this](int ue, const PdcpPdu& p, Time t) { on_delivered(LinkKind::fr2, ue, p, t); },
                      {}}) {
    fr1_.set_discard_after(cfg.pdcp_discard);
    fr2_.set_discard_after(cfg.pdcp_discard);
    fr1_.set_accounting_window(cfg.warmup, cfg.sim_time);
    fr2_.set_accounting_window(cfg.warmup, cfg.sim_time);
    for (std::size_t i = 0; i < spec.distances_m.size(); ++i) {
      auto ue = std::make_unique<UeState>(cfg, spec.seed, static_cast<int>(i));
      ue->distance_m = spec.distances_m[i];
      fr1_.attach(ue->distance_m);
      fr2_.attach(ue->distance_m, cfg.blockage);
      ues_.push_back(std::move(ue));
    }
  }

  RunResult run(RunDetail* detail) {
    fr1_.start();
    fr2_.start();
    sim_.schedule(0.0, [this] { measure_all(); });
    const double period = cfg_.traffic.frame_period();
    for (std::size_t i = 0; i < ues_.size(); ++i) {
      RngStream phase(spec_.seed, "ue" + std::to_string(i) + "/phase");
      const Time first = phase.uniform() * period;
      sim_.schedule(first, [this, i] { on_frame(static_cast<int>(i)); });
    }
    // The extra margin lets the deadline handlers of the last frames run.
    const Time end = cfg_.sim_time + cfg_.traffic.d_qos + 1e-3;
    sim_.run_until(end);
    return collect(detail);
  }

 private:
  void measure_all() {
    const Time now = sim_.now();
    for (int i = 0; i < static_cast<int>(ues_.size()); ++i) {
      UeState& ue = *ues_[i];
      ue.est.fr1 = fr1_.measure(i);
      ue.est.fr2 = fr2_.measure(i);
      ue.est.last_update = now;
      if (!ue.have_c_est) {
        ue.c_est = ue.est.fr1;
        ue.have_c_est = true;
      } else {
        ue.c_est = cfg_.c_est_smoothing * ue.est.fr1 + (1.0 - cfg_.c_est_smoothing) * ue.c_est;
      }
      if (spec_.policy == Policy::dbtb) {
        ue.queue.set_rate_estimate(ue.c_est);
        arm_queue_timer(i);
      }
    }
    if (now + cfg_.measurement_period <= cfg_.sim_time + cfg_.traffic.d_qos) {
      sim_.schedule_in(cfg_.measurement_period, [this] { measure_all(); });
    }
  }

  void on_frame(int i) {
    UeState& ue = *ues_[i];
    const Time now = sim_.now();
    const VideoFrame frame = ue.traffic.next_frame(now);
    ue.tracker.add(frame);
    // Settle the frame just after its deadline so deliveries landing exactly
    // on the deadline still count.
    const Time deadline = std::nextafter(now + cfg_.traffic.d_qos, INFINITY);
    const auto fid = frame.frame_id;
    sim_.schedule(deadline, [this, i, fid] { ues_[i]->tracker.finalize(fid); });

    std::vector<PdcpPdu> to_fr2;
    for (const AppPacket& pkt : fragment(frame, cfg_.traffic)) {
      ++ue.packets_generated;
      const PdcpPdu pdu{ue.next_seq++, pkt.size_bits, pkt.frame_id, pkt.packet_index, now};
      switch (route(ue)) {
        case Route::fr1:
          if (spec_.policy == Policy::dbtb) {
            ++ue.dbtb_pdus;
            ++ue.dbtb_to_fr1;
          }
          fr1_.enqueue(i, pdu);
          break;
        case Route::fr2:
          to_fr2.push_back(pdu);
          break;
        case Route::both:
          fr1_.enqueue(i, pdu);
          to_fr2.push_back(pdu);
          break;
        case Route::deferred:
          ++ue.dbtb_pdus;
          ue.queue.push(pdu, now);
          to_fr2.push_back(pdu);
          break;
      }
    }
    if (!to_fr2.empty()) {
      sim_.schedule_in(cfg_.xn_latency, [this, i, batch = std::move(to_fr2)] {
        for (const auto& p : batch) fr2_.enqueue(i, p);
      });
    }
    if (spec_.policy == Policy::dbtb) arm_queue_timer(i);

    const Time next = now + cfg_.traffic.frame_period();
    if (next < cfg_.sim_time) sim_.schedule(next, [this, i] { on_frame(i); });
  }

  Route route(UeState& ue) {
    switch (spec_.policy) {
      case Policy::single_fr1:
      case Policy::single_fr2:
        return route_single(spec_.policy);
      case Policy::link_switching:
        return route_link_switching(ue.est);
      case Policy::packet_splitting:
        return route_packet_splitting(ue.est, ue.splitting_rng);
      case Policy::packet_duplication:
        return route_duplication();
      case Policy::dbtb:
        return route_dbtb(ue.est);
    }
    return Route::fr1;
  }

  // Keeps one engine timer per DBTB queue, armed at the head's deadline.
  void arm_queue_timer(int i) {
    UeState& ue = *ues_[i];
    const auto head = ue.queue.next_deadline();
    if (!head) {
      if (ue.queue_timer_at >= 0) sim_.cancel(ue.queue_timer);
      ue.queue_timer_at = -1.0;
      return;
    }
    const Time at = std::max(*head, sim_.now());
    if (ue.queue_timer_at >= 0 && ue.queue_timer_at <= at) return;  // fires early enough
    if (ue.queue_timer_at >= 0) sim_.cancel(ue.queue_timer);
    ue.queue_timer_at = at;
    ue.queue_timer = sim_.schedule(at, [this, i] { on_queue_timer(i); });
  }

  void on_queue_timer(int i) {
    UeState& ue = *ues_[i];
    ue.queue_timer_at = -1.0;
    for (const PdcpPdu& pdu : ue.queue.pop_expired(sim_.now())) {
      ++ue.dbtb_to_fr1;
      fr1_.enqueue(i, pdu);
    }
    arm_queue_timer(i);
  }

  void on_xn_ack(int i, const std::vector<Seq>& seqs) {
    UeState& ue = *ues_[i];
    ue.dbtb_acked += ue.queue.acknowledge(seqs).size();
    arm_queue_timer(i);
  }

  void on_delivered(LinkKind link, int i, const PdcpPdu& pdu, Time now) {
    UeState& ue = *ues_[i];
    if (link == LinkKind::fr2 && spec_.policy == Policy::dbtb) {
      if (ue.ack_batch_at != now || !ue.ack_batch) {
        ue.ack_batch = std::make_shared<std::vector<Seq>>();
        ue.ack_batch_at = now;
        sim_.schedule_in(cfg_.xn_latency,
                         [this, i, batch = ue.ack_batch] { on_xn_ack(i, *batch); });
      }
      ue.ack_batch->push_back(pdu.seq);
    }
    release(i, ue.rx.receive(pdu, now), now);
  }

  void release(int i, const std::vector<PdcpPdu>& pdus, Time now) {
    UeState& ue = *ues_[i];
    for (const PdcpPdu& p : pdus) ue.tracker.on_app_delivery(p.frame_id, p.packet_index, now);
    const auto t = ue.rx.timer();
    const Time want = t ? *t : -1.0;
    if (want == ue.rx_timer_at) return;
    if (ue.rx_timer_at >= 0) sim_.cancel(ue.rx_timer);
    ue.rx_timer_at = want;
    if (t) {
      ue.rx_timer = sim_.schedule(*t, [this, i] {
        UeState& u = *ues_[i];
        u.rx_timer_at = -1.0;
        release(i, u.rx.on_timeout(sim_.now()), sim_.now());
      });
    }
  }

  RunResult collect(RunDetail* detail) {
    RunResult r;
    r.point_id = spec_.point_id;
    r.seed = spec_.seed;
    const ResourceLedger l1 = fr1_.ledger();
    const ResourceLedger l2 = fr2_.ledger();
    r.fr1_usage = resource_usage(l1);
    r.fr2_usage = resource_usage(l2);
    r.fr1_pdus = fr1_.pdus_enqueued();
    for (std::size_t i = 0; i < ues_.size(); ++i) {
      const UeState& ue = *ues_[i];
      UeStats s;
      s.ue_id = static_cast<int>(i);
      s.distance_m = ue.distance_m;
      s.frames_generated = ue.tracker.frames_generated();
      s.frames_on_time = ue.tracker.frames_on_time();
      s.frames_lost = ue.tracker.frames_lost();
      r.ues.push_back(s);
    }
    if (detail != nullptr) {
      *detail = RunDetail{};
      detail->fr1_slots_used = l1.slots_used();
      detail->fr2_slots_used = l2.slots_used();
      detail->events = sim_.dispatched();
      const double span = sim_.now();
      for (std::size_t i = 0; i < ues_.size(); ++i) {
        const UeState& ue = *ues_[i];
        detail->frame_outcomes.push_back(ue.tracker.outcomes());
        const auto* b = fr2_.blockage(static_cast<int>(i));
        detail->blocked_fraction.push_back(b ? b->blocked_time() / span : 0.0);
        detail->packets_generated += ue.packets_generated;
        detail->packets_released += ue.tracker.packets_released();
        detail->duplicates_dropped += ue.rx.duplicates();
        detail->frames_pending += ue.tracker.frames_pending();
        detail->dbtb_pdus += ue.dbtb_pdus;
        detail->dbtb_acked += ue.dbtb_acked;
        detail->dbtb_to_fr1 += ue.dbtb_to_fr1;
        detail->dbtb_queued_at_end += ue.queue.size();
        detail->dbtb_spacing_ok = detail->dbtb_spacing_ok && ue.queue.spacing_holds(1e-9);
      }
    }
    return r;
  }

  const ScenarioConfig& cfg_;
  const RunSpec& spec_;
  Simulator sim_;
  Gnb fr1_;
  Gnb fr2_;
  std::vector<std::unique_ptr<UeState>> ues_;
};

}  // namespace

RunResult simulate(const ScenarioConfig& cfg, const RunSpec& spec, RunDetail* detail) {
  cfg.validate();
  if (spec.distances_m.empty()) throw std::invalid_argument("a run needs at least one UE");
  Cell cell(cfg, spec);
  return cell.run(detail);
}

}  // namespace mcsim
