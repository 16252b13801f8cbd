use super::{GreenWindow, Intersection, SignalState};

/// Seconds since the most recent start of green.
fn phase_time(ix: &Intersection, t: f64) -> f64 {
    ((t % ix.cycle_s) - ix.green_offset_s).rem_euclid(ix.cycle_s)
}

pub fn signal_state(ix: &Intersection, t: f64) -> SignalState {
    if phase_time(ix, t) < ix.green_duration_s {
        SignalState::Green
    } else {
        SignalState::Red
    }
}

fn queue_at_green_start(ix: &Intersection) -> f64 {
    ix.initial_queue + ix.arrival_rate * (ix.cycle_s - ix.green_duration_s)
}

/// Standing queue in vehicles. Every red starts from `initial_queue`, grows
/// at `arrival_rate` during red and drains at `discharge_rate` during green.
pub fn queue_length(ix: &Intersection, t: f64) -> f64 {
    let phase = phase_time(ix, t);
    if phase < ix.green_duration_s {
        (queue_at_green_start(ix) - ix.discharge_rate * phase).max(0.0)
    } else {
        ix.initial_queue + ix.arrival_rate * (phase - ix.green_duration_s)
    }
}

/// Green window of the `cycle_index`-th green phase (counted from t = 0).
/// When the queue cannot discharge within the green the window is empty and
/// sits at the end of green.
pub fn green_window(ix: &Intersection, cycle_index: u64) -> GreenWindow {
    let green_start = cycle_index as f64 * ix.cycle_s + ix.green_offset_s;
    let close_time = green_start + ix.green_duration_s;
    let delay = queue_at_green_start(ix) / ix.discharge_rate;
    let open_time = if delay >= ix.green_duration_s {
        close_time
    } else {
        green_start + delay
    };
    GreenWindow {
        intersection_id: ix.id,
        open_time,
        close_time,
    }
}

/// Non-empty windows closing after `after`, over `horizon_cycles` cycles
/// starting with the one that contains `after`.
pub fn usable_windows(
    ix: &Intersection,
    after: f64,
    horizon_cycles: u32,
) -> impl Iterator<Item = GreenWindow> + '_ {
    let first = ((after - ix.green_offset_s) / ix.cycle_s).floor().max(0.0) as u64;
    (first..first + horizon_cycles as u64 + 1)
        .map(move |n| green_window(ix, n))
        .filter(move |w| !w.is_empty() && w.close_time > after)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ix(cycle: f64, offset: f64, green: f64, queue: f64) -> Intersection {
        Intersection {
            id: 1,
            position_m: 100.0,
            cycle_s: cycle,
            green_offset_s: offset,
            green_duration_s: green,
            initial_queue: queue,
            discharge_rate: 0.5,
            discharge_headway_length: 7.5,
            arrival_rate: 0.0,
        }
    }

    #[test]
    fn phase_evaluation() {
        let s = ix(60.0, 0.0, 30.0, 0.0);
        assert_eq!(signal_state(&s, 10.0), SignalState::Green);
        assert_eq!(signal_state(&s, 45.0), SignalState::Red);
        // 90 mod 60 = 30, which is outside [0, 30)
        assert_eq!(signal_state(&s, 90.0), SignalState::Red);
        assert_eq!(signal_state(&s, 120.0), SignalState::Green);
    }

    #[test]
    fn offset_wraps_around_cycle_boundary() {
        let s = ix(60.0, 50.0, 20.0, 0.0);
        assert_eq!(signal_state(&s, 55.0), SignalState::Green);
        assert_eq!(signal_state(&s, 65.0), SignalState::Green);
        assert_eq!(signal_state(&s, 5.0), SignalState::Green);
        assert_eq!(signal_state(&s, 10.0), SignalState::Red);
        assert_eq!(signal_state(&s, 49.9), SignalState::Red);
    }

    #[test]
    fn queue_drains_during_green() {
        let s = ix(60.0, 0.0, 30.0, 5.0);
        assert!((queue_length(&s, 4.0) - 3.0).abs() < 1e-12);
        assert_eq!(queue_length(&s, 20.0), 0.0);
        assert_eq!(queue_length(&s, 45.0), 5.0);
        let empty = ix(60.0, 0.0, 30.0, 0.0);
        for t in [0.0, 12.5, 31.0, 59.9, 600.0] {
            assert_eq!(queue_length(&empty, t), 0.0);
        }
    }

    #[test]
    fn queue_grows_with_arrivals_during_red() {
        let mut s = ix(60.0, 0.0, 30.0, 2.0);
        s.arrival_rate = 0.1;
        assert!((queue_length(&s, 40.0) - 3.0).abs() < 1e-12);
        // green starts with 2 + 0.1 * 30 = 5 vehicles
        assert!((queue_length(&s, 62.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn windows() {
        let w = green_window(&ix(60.0, 0.0, 30.0, 5.0), 0);
        assert_eq!((w.open_time, w.close_time), (10.0, 30.0));
        let w = green_window(&ix(60.0, 0.0, 30.0, 0.0), 2);
        assert_eq!((w.open_time, w.close_time), (120.0, 150.0));
        let w = green_window(&ix(60.0, 0.0, 30.0, 20.0), 0);
        assert!(w.is_empty());
        assert_eq!(w.open_time, 30.0);
    }

    #[test]
    fn usable_windows_skip_closed_ones() {
        let s = ix(60.0, 0.0, 30.0, 5.0);
        let ws: Vec<_> = usable_windows(&s, 25.0, 2).collect();
        assert_eq!(ws[0].open_time, 10.0);
        let ws: Vec<_> = usable_windows(&s, 31.0, 2).collect();
        assert_eq!(ws[0].open_time, 70.0);
        assert!(usable_windows(&ix(60.0, 0.0, 0.0, 0.0), 0.0, 5).next().is_none());
    }
}
