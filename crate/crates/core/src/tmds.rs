//! TMDS 8b/10b video coding as used on the DVI and HDMI video channels.
//!
//! Symbols are stored as 10-bit words where bit 0 is the first bit on the
//! wire. Encoding is the two-stage DVI 1.0 scheme: a transition-minimizing
//! differential stage (XOR or XNOR chain, flagged in bit 8) followed by a
//! DC-balancing conditional inversion of bits 0..7 (flagged in bit 9).

use std::fmt;

use crate::error::TmdsError;

/// A single 10-bit TMDS word. Bit 0 is transmitted first.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TmdsSymbol(u16);

impl TmdsSymbol {
    pub const MASK: u16 = 0x3ff;

    /// Builds a symbol from a raw word; `None` if bits above bit 9 are set.
    pub const fn from_bits(bits: u16) -> Option<Self> {
        if bits & !Self::MASK != 0 {
            None
        } else {
            Some(TmdsSymbol(bits))
        }
    }

    pub const fn bits(self) -> u16 {
        self.0
    }

    pub const fn bit(self, index: u32) -> bool {
        (self.0 >> index) & 1 == 1
    }

    pub fn ones(self) -> u32 {
        self.0.count_ones()
    }

    /// Serializes the word, first transmitted bit first.
    pub fn wire_bits(self) -> impl Iterator<Item = bool> {
        (0..10).map(move |i| self.bit(i))
    }

    pub fn is_control(self) -> bool {
        CONTROL_CODES.contains(&self.0)
    }
}

impl fmt::Debug for TmdsSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TmdsSymbol({:010b})", self.0)
    }
}

/// Running disparity: number of ones minus number of zeros sent so far in
/// the current video data period.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DisparityState(i32);

impl DisparityState {
    pub const RESET: DisparityState = DisparityState(0);

    pub const fn new(cnt: i32) -> Self {
        DisparityState(cnt)
    }

    pub const fn count(self) -> i32 {
        self.0
    }
}

/// Blanking codes for ctl = 00, 01, 10, 11 (bit 0 transmitted first).
const CONTROL_CODES: [u16; 4] = [0b11_0101_0100, 0b00_1010_1011, 0b01_0101_0100, 0b10_1010_1011];

/// Transition-minimizing stage. Returns the 9-bit intermediate word with
/// bit 8 set when the XOR chain was used.
pub fn stage_one(data: u8) -> u16 {
    let d = data as u16;
    let ones = data.count_ones();
    // Prefix XOR over the byte: q[i] = d[0] ^ d[1] ^ ... ^ d[i].
    let mut q = d ^ (d << 1);
    q ^= q << 2;
    q ^= q << 4;
    q &= 0xff;
    if ones > 4 || (ones == 4 && data & 1 == 0) {
        // XNOR chain differs from the XOR chain on every odd bit.
        q ^ 0xaa
    } else {
        q | 0x100
    }
}

/// Encodes one video byte, returning the symbol and the updated disparity.
pub fn encode_byte(data: u8, state: DisparityState) -> (TmdsSymbol, DisparityState) {
    let q_m = stage_one(data);
    let low = q_m & 0xff;
    let xor_used = q_m & 0x100 != 0;
    let n1 = low.count_ones() as i32;
    let n0 = 8 - n1;
    let cnt = state.0;

    let (word, cnt) = if cnt == 0 || n1 == n0 {
        if xor_used {
            (0x100 | low, cnt + n1 - n0)
        } else {
            (0x200 | (!low & 0xff), cnt + n0 - n1)
        }
    } else if (cnt > 0 && n1 > n0) || (cnt < 0 && n0 > n1) {
        let q8 = xor_used as i32;
        (0x200 | (q_m & 0x100) | (!low & 0xff), cnt + 2 * q8 + n0 - n1)
    } else {
        let nq8 = (!xor_used) as i32;
        ((q_m & 0x100) | low, cnt - 2 * nq8 + n1 - n0)
    };
    (TmdsSymbol(word), DisparityState(cnt))
}

/// Inverts [`encode_byte`]. Control codes are rejected as non-video.
pub fn decode_symbol(symbol: TmdsSymbol) -> Result<u8, TmdsError> {
    if let Some(ctl) = CONTROL_CODES.iter().position(|&c| c == symbol.0) {
        return Err(TmdsError::ControlSymbol(ctl as u8));
    }
    let mut word = symbol.0;
    if word & 0x200 != 0 {
        word ^= 0xff;
    }
    let q = word & 0xff;
    // Undo the prefix chain: d[i] = q[i] ^ q[i-1] (XNOR: inverted).
    let mut d = q ^ (q << 1);
    if word & 0x100 == 0 {
        d ^= 0xfe;
    }
    Ok((d & 0xff) as u8)
}

/// Returns the fixed blanking code for a 2-bit control value.
pub fn control_symbol(ctl: u8) -> Result<TmdsSymbol, TmdsError> {
    CONTROL_CODES
        .get(ctl as usize)
        .map(|&c| TmdsSymbol(c))
        .ok_or(TmdsError::InvalidControl(ctl))
}

/// Encodes one video line; the disparity counter starts at zero.
pub fn encode_line_symbols(pixels: &[u8]) -> Vec<TmdsSymbol> {
    let mut state = DisparityState::RESET;
    pixels
        .iter()
        .map(|&p| {
            let (sym, next) = encode_byte(p, state);
            state = next;
            sym
        })
        .collect()
}

/// Encodes one video line to its wire bits (0 or 1), first bit first.
pub fn encode_line(pixels: &[u8]) -> Vec<u8> {
    encode_line_symbols(pixels)
        .into_iter()
        .flat_map(|s| s.wire_bits().map(u8::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_byte_uses_xor_chain() {
        assert_eq!(stage_one(0x00), 0x100);
    }

    #[test]
    fn white_round_trip_from_reset() {
        let (sym, _) = encode_byte(0xff, DisparityState::RESET);
        assert_eq!(decode_symbol(sym).unwrap(), 0xff);
    }

    #[test]
    fn control_codes_decode_as_non_video() {
        for ctl in 0..4 {
            let sym = control_symbol(ctl).unwrap();
            assert_eq!(decode_symbol(sym), Err(TmdsError::ControlSymbol(ctl)));
            assert_eq!(control_symbol(ctl).unwrap(), sym);
        }
        assert_eq!(control_symbol(0).unwrap().bits(), 0x354);
        assert!(control_symbol(4).is_err());
    }

    #[test]
    fn empty_line() {
        assert!(encode_line(&[]).is_empty());
    }

    #[test]
    fn line_length_and_reset() {
        let line = [12u8, 200, 7, 7, 7, 255];
        let bits = encode_line(&line);
        assert_eq!(bits.len(), 60);
        let a = encode_line(&line[..3]);
        let b = encode_line(&line[3..]);
        let mut joined = a.clone();
        joined.extend(&b);
        // Lines restart the counter, so splitting changes nothing per line.
        assert_eq!(encode_line(&line[..3]), a);
        assert_eq!(joined.len(), bits.len());
    }

    #[test]
    fn symbol_from_bits_rejects_wide_words() {
        assert!(TmdsSymbol::from_bits(0x400).is_none());
        assert_eq!(TmdsSymbol::from_bits(0x3ff).unwrap().ones(), 10);
    }
}
