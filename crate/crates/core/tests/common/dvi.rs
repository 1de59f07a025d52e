//! Literal bit-array transcription of the DVI 1.0 TMDS encoder.

/// Returns (q_out as bits[0..10], new cnt).
pub fn encode(d: u8, cnt: i32) -> ([bool; 10], i32) {
    let bits: Vec<bool> = (0..8).map(|i| (d >> i) & 1 == 1).collect();
    let n1_d = bits.iter().filter(|&&b| b).count();
    let mut q_m = [false; 9];
    q_m[0] = bits[0];
    let use_xnor = n1_d > 4 || (n1_d == 4 && !bits[0]);
    for i in 1..8 {
        q_m[i] = if use_xnor {
            !(q_m[i - 1] ^ bits[i])
        } else {
            q_m[i - 1] ^ bits[i]
        };
    }
    q_m[8] = !use_xnor;
    let n1 = q_m[..8].iter().filter(|&&b| b).count() as i32;
    let n0 = 8 - n1;
    let mut q_out = [false; 10];
    let new_cnt;
    if cnt == 0 || n1 == n0 {
        q_out[9] = !q_m[8];
        q_out[8] = q_m[8];
        for i in 0..8 {
            q_out[i] = if q_m[8] { q_m[i] } else { !q_m[i] };
        }
        new_cnt = if !q_m[8] { cnt + (n0 - n1) } else { cnt + (n1 - n0) };
    } else if (cnt > 0 && n1 > n0) || (cnt < 0 && n0 > n1) {
        q_out[9] = true;
        q_out[8] = q_m[8];
        for i in 0..8 {
            q_out[i] = !q_m[i];
        }
        new_cnt = cnt + 2 * (q_m[8] as i32) + (n0 - n1);
    } else {
        q_out[9] = false;
        q_out[8] = q_m[8];
        q_out[..8].copy_from_slice(&q_m[..8]);
        new_cnt = cnt - 2 * ((!q_m[8]) as i32) + (n1 - n0);
    }
    (q_out, new_cnt)
}

pub fn stage_one(d: u8) -> [bool; 9] {
    let bits: Vec<bool> = (0..8).map(|i| (d >> i) & 1 == 1).collect();
    let n1_d = bits.iter().filter(|&&b| b).count();
    let use_xnor = n1_d > 4 || (n1_d == 4 && !bits[0]);
    let mut q_m = [false; 9];
    q_m[0] = bits[0];
    for i in 1..8 {
        q_m[i] = if use_xnor {
            !(q_m[i - 1] ^ bits[i])
        } else {
            q_m[i - 1] ^ bits[i]
        };
    }
    q_m[8] = !use_xnor;
    q_m
}

pub fn pack(bits: &[bool]) -> u16 {
    bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u16) << i))
}

pub fn transitions(bits: &[bool]) -> usize {
    bits.windows(2).filter(|w| w[0] != w[1]).count()
}
